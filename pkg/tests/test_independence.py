"""Band-independence tournament: oracle, counting tables, recovery."""

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hearfit.errors import ConfigurationError, DomainError
from hearfit.independence import (
    CountTables,
    accumulate_batch,
    enumerate_gain_sets,
    neg_euclidean_similarity,
    oracle_prefer,
    ratio_table_to_json,
    run_rrt,
    table_to_csv,
    update_counts,
    validate_independence,
)

TRUE_SET = [3, 4, 5, 2, 3]
CURVE_1 = [4, 5, 6, 3, 4]
CURVE_2 = [4, 3, 5, 1, 4]


# --- oracle -----------------------------------------------------------------


def test_oracle_published_example():
    # Curve 2 is closer to the true curve (distance 2 vs sqrt 5).
    assert oracle_prefer(CURVE_1, CURVE_2, TRUE_SET) == 2
    assert neg_euclidean_similarity(np.array(CURVE_1), np.array(TRUE_SET)) == pytest.approx(-np.sqrt(5))
    assert neg_euclidean_similarity(np.array(CURVE_2), np.array(TRUE_SET)) == pytest.approx(-2.0)


def test_oracle_exact_match_wins():
    assert oracle_prefer(TRUE_SET, CURVE_2, TRUE_SET) == 1


def test_oracle_symmetric_tie():
    t = [4, 4, 4]
    assert oracle_prefer([5, 5, 5], [3, 3, 3], t) == 0


def test_oracle_length_mismatch():
    with pytest.raises(DomainError):
        oracle_prefer([1, 2], [1, 2, 3], [1, 2, 3])


# --- counting ------------------------------------------------------------------


def test_update_counts_published_pair():
    tables = CountTables.zeros(8, 5)
    update_counts(tables, CURVE_1, CURVE_2, outcome=2)
    # Differing bands are 2, 3, 4 (0-based 1, 2, 3); winner is curve 2.
    assert tables.preference[3 - 1, 1] == 1
    assert tables.preference[5 - 1, 2] == 1
    assert tables.preference[1 - 1, 3] == 1
    assert tables.preference.sum() == 3
    for level, band in [(3, 1), (5, 1), (5, 2), (6, 2), (1, 3), (3, 3)]:
        assert tables.occurrence[level - 1, band] == 1
    assert tables.occurrence.sum() == 6


def test_update_counts_identical_curves_no_change():
    tables = CountTables.zeros(8, 5)
    update_counts(tables, CURVE_1, CURVE_1, outcome=0)
    assert tables.preference.sum() == 0 and tables.occurrence.sum() == 0


def test_update_counts_tie_splits_credit():
    tables = CountTables.zeros(4, 1)
    update_counts(tables, [1], [3], outcome=0)
    assert tables.preference[0, 0] == 0.5 and tables.preference[2, 0] == 0.5
    assert tables.occurrence[0, 0] == 1 and tables.occurrence[2, 0] == 1


def test_ratio_zero_over_zero():
    tables = CountTables.zeros(4, 2)
    assert np.all(tables.ratio() == 0)


def test_batch_matches_scalar_path():
    rng = np.random.default_rng(0)
    n, bands, m = 6, 4, 500
    c1 = rng.integers(1, n + 1, size=(m, bands))
    c2 = rng.integers(1, n + 1, size=(m, bands))
    t = rng.integers(1, n + 1, size=bands)
    outcomes = np.array([oracle_prefer(c1[i], c2[i], t) for i in range(m)], dtype=np.int8)
    scalar = CountTables.zeros(n, bands)
    for i in range(m):
        update_counts(scalar, c1[i], c2[i], int(outcomes[i]))
    batch = CountTables.zeros(n, bands)
    accumulate_batch(batch, c1, c2, outcomes)
    assert np.allclose(scalar.preference, batch.preference)
    assert np.allclose(scalar.occurrence, batch.occurrence)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_property_count_conservation(seed):
    rng = np.random.default_rng(seed)
    n, bands = 5, 3
    tables = CountTables.zeros(n, bands)
    for _ in range(20):
        c1 = rng.integers(1, n + 1, size=bands)
        c2 = rng.integers(1, n + 1, size=bands)
        before_p, before_o = tables.preference.sum(), tables.occurrence.sum()
        outcome = oracle_prefer(c1, c2, rng.integers(1, n + 1, size=bands))
        update_counts(tables, c1, c2, outcome)
        differing = int(np.sum(c1 != c2))
        assert tables.preference.sum() - before_p == pytest.approx(differing)
        assert tables.occurrence.sum() - before_o == pytest.approx(2 * differing)
        assert np.all(tables.preference <= tables.occurrence + 1e-12)
        assert np.all(tables.ratio() <= 1.0 + 1e-12)


def test_merge_accumulates():
    a = CountTables.zeros(3, 2)
    b = CountTables.zeros(3, 2)
    update_counts(a, [1, 2], [2, 1], 1)
    update_counts(b, [1, 2], [2, 1], 2)
    a.merge(b)
    assert a.occurrence.sum() == 8


# --- tournaments ------------------------------------------------------------------


def test_enumerate_gain_sets_shape():
    sets = enumerate_gain_sets(3, 2)
    assert sets.shape == (9, 2)
    assert len({tuple(r) for r in sets}) == 9


def hand_rrt_n2_b2(true_levels):
    """Brute-force reference over the 6 unordered pairs of 4 gain sets."""
    tables = CountTables.zeros(2, 2)
    sets = [np.array(s) for s in itertools.product([1, 2], repeat=2)]
    for c1, c2 in itertools.combinations(sets, 2):
        update_counts(tables, c1, c2, oracle_prefer(c1, c2, true_levels))
    return tables


def test_full_rrt_matches_hand_enumeration():
    table = run_rrt(2, 2, [1, 2], mode="full")
    reference = hand_rrt_n2_b2([1, 2])
    assert np.allclose(table.counts.preference, reference.preference)
    assert np.allclose(table.counts.occurrence, reference.occurrence)
    assert table.argmax_levels() == (1, 2)


def test_full_rrt_band_exchange_symmetry():
    table = run_rrt(4, 3, [2, 4, 2], mode="full")
    assert np.allclose(table.ratio[:, 0], table.ratio[:, 2])


def test_full_rrt_budget_guard():
    with pytest.raises(ConfigurationError):
        run_rrt(8, 5, [3, 4, 5, 2, 3], mode="full", max_pairs=1000)


def test_sampled_rrt_deterministic():
    t1 = run_rrt(4, 3, [1, 2, 3], mode="sampled", n_pairs=5000, seed=7)
    t2 = run_rrt(4, 3, [1, 2, 3], mode="sampled", n_pairs=5000, seed=7)
    assert np.array_equal(t1.counts.preference, t2.counts.preference)


def test_sampled_rrt_requires_pairs():
    with pytest.raises(ConfigurationError):
        run_rrt(4, 3, [1, 2, 3], mode="sampled")


def test_unknown_mode():
    with pytest.raises(ConfigurationError):
        run_rrt(4, 3, [1, 2, 3], mode="bogus")


def test_invalid_true_set():
    with pytest.raises(DomainError):
        run_rrt(4, 3, [0, 2, 3], mode="full")
    with pytest.raises(DomainError):
        run_rrt(4, 3, [1, 2], mode="full")


def test_custom_similarity_is_used():
    # Similarity preferring *larger* levels ignores the true set entirely.
    table = run_rrt(3, 2, [1, 1], mode="full", similarity=lambda c, t: float(np.sum(c)))
    assert table.argmax_levels() == (3, 3)


def test_validate_independence_small_full():
    report = validate_independence(5, 4, 3, mode="full", seed=0)
    assert report.matches == 5
    assert report.mismatched_cases == []


def test_validate_independence_deterministic():
    r1 = validate_independence(3, 3, 2, mode="full", seed=11)
    r2 = validate_independence(3, 3, 2, mode="full", seed=11)
    assert r1.to_dict() == r2.to_dict()


def test_validate_independence_single_band():
    assert validate_independence(1, 2, 1, mode="full", seed=2).matches == 1


# --- exports ----------------------------------------------------------------------


def test_csv_and_json_exports(tmp_path):
    table = run_rrt(3, 2, [1, 2], mode="full")
    csv_path = tmp_path / "ratio.csv"
    table_to_csv(table.ratio, csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "level,band1,band2"
    assert len(lines) == 4

    json_path = tmp_path / "table.json"
    ratio_table_to_json(table, json_path)
    payload = json.loads(json_path.read_text())
    assert payload["argmax_levels"] == [1, 2]
    assert np.allclose(payload["ratio"], table.ratio)
