"""Round-robin tournament simulation validating band independence.

A deterministic similarity oracle (default: negative Euclidean distance in
level-index space) picks the winner of every pair of gain sets. Two tables
accumulate, per (level, band) cell, how often that level sat in a differing
band of the winning curve (preference) and how often it sat in a differing
band at all (occurrence). The ratio table's per-band argmax is expected to
recover the true gain set.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

DEFAULT_PAIR_BUDGET = 50_000_000
_CHUNK = 1_000_000

Similarity = Callable[[np.ndarray, np.ndarray], float]


def neg_euclidean_similarity(curve: np.ndarray, true_curve: np.ndarray) -> float:
    """Default oracle score: closer to the true curve is better."""
    diff = np.asarray(curve, dtype=float) - np.asarray(true_curve, dtype=float)
    return -float(np.sqrt(np.sum(diff * diff)))


@dataclass
class CountTables:
    """preference[i, b] and occurrence[i, b] over levels i (rows) x bands b."""

    preference: np.ndarray
    occurrence: np.ndarray

    @classmethod
    def zeros(cls, n_levels: int, bands: int) -> "CountTables":
        return cls(np.zeros((n_levels, bands)), np.zeros((n_levels, bands)))

    def merge(self, other: "CountTables") -> "CountTables":
        self.preference += other.preference
        self.occurrence += other.occurrence
        return self

    def ratio(self) -> np.ndarray:
        out = np.zeros_like(self.preference)
        np.divide(self.preference, self.occurrence, out=out, where=self.occurrence > 0)
        return out


@dataclass
class RatioTable:
    ratio: np.ndarray
    counts: CountTables

    def argmax_levels(self) -> tuple[int, ...]:
        """1-based per-band argmax of the ratio table."""
        return tuple(int(i) + 1 for i in np.argmax(self.ratio, axis=0))


def oracle_prefer(
    c1: Sequence[int],
    c2: Sequence[int],
    true_levels: Sequence[int],
    similarity: Similarity = neg_euclidean_similarity,
) -> int:
    """1 if c1 wins, 2 if c2 wins, 0 on an exact similarity tie."""
    c1 = np.asarray(c1)
    c2 = np.asarray(c2)
    t = np.asarray(true_levels)
    if c1.shape != t.shape or c2.shape != t.shape:
        raise DomainError("gain sets and true set must have equal length")
    s1 = similarity(c1, t)
    s2 = similarity(c2, t)
    if s1 > s2:
        return 1
    if s2 > s1:
        return 2
    return 0


def update_counts(tables: CountTables, c1, c2, outcome: int) -> CountTables:
    """Apply one pair's counting updates in place (and return the tables).

    Only bands where the curves differ are touched: both levels gain one
    occurrence; the winner's level gains one preference (0.5 each on a tie).
    """
    c1 = np.asarray(c1)
    c2 = np.asarray(c2)
    for band in range(tables.preference.shape[1]):
        l1, l2 = int(c1[band]), int(c2[band])
        if l1 == l2:
            continue
        tables.occurrence[l1 - 1, band] += 1.0
        tables.occurrence[l2 - 1, band] += 1.0
        if outcome == 1:
            tables.preference[l1 - 1, band] += 1.0
        elif outcome == 2:
            tables.preference[l2 - 1, band] += 1.0
        else:
            tables.preference[l1 - 1, band] += 0.5
            tables.preference[l2 - 1, band] += 0.5
    return tables


def accumulate_batch(
    tables: CountTables, c1: np.ndarray, c2: np.ndarray, outcome: np.ndarray
) -> CountTables:
    """Vectorized counting for a batch of pairs.

    c1, c2: (m, B) integer level arrays (1-based); outcome: (m,) in {0, 1, 2}.
    """
    n_levels, bands = tables.preference.shape
    diff = c1 != c2
    band_idx = np.broadcast_to(np.arange(bands), c1.shape)
    flat1 = ((c1 - 1) * bands + band_idx)[diff]
    flat2 = ((c2 - 1) * bands + band_idx)[diff]
    size = n_levels * bands
    occ = np.bincount(flat1, minlength=size) + np.bincount(flat2, minlength=size)
    tables.occurrence += occ.reshape(n_levels, bands)

    win1 = diff & (outcome == 1)[:, None]
    win2 = diff & (outcome == 2)[:, None]
    tie = diff & (outcome == 0)[:, None]
    flat = ((c1 - 1) * bands + band_idx)[win1]
    pref = np.bincount(flat, minlength=size).astype(float)
    flat = ((c2 - 1) * bands + band_idx)[win2]
    pref += np.bincount(flat, minlength=size)
    flat = ((c1 - 1) * bands + band_idx)[tie]
    pref += 0.5 * np.bincount(flat, minlength=size)
    flat = ((c2 - 1) * bands + band_idx)[tie]
    pref += 0.5 * np.bincount(flat, minlength=size)
    tables.preference += pref.reshape(n_levels, bands)
    return tables


def enumerate_gain_sets(n_levels: int, bands: int) -> np.ndarray:
    """All n_levels**bands gain sets as an (S, B) array of 1-based levels."""
    grids = np.meshgrid(*([np.arange(1, n_levels + 1)] * bands), indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, bands)


def _batch_outcomes(
    c1: np.ndarray, c2: np.ndarray, t: np.ndarray, similarity: Similarity | None
) -> np.ndarray:
    if similarity is None:
        d1 = np.sum((c1 - t) ** 2, axis=1)
        d2 = np.sum((c2 - t) ** 2, axis=1)
        out = np.zeros(c1.shape[0], dtype=np.int8)
        out[d1 < d2] = 1
        out[d2 < d1] = 2
        return out
    s1 = np.array([similarity(row, t) for row in c1])
    s2 = np.array([similarity(row, t) for row in c2])
    out = np.zeros(c1.shape[0], dtype=np.int8)
    out[s1 > s2] = 1
    out[s2 > s1] = 2
    return out


def run_rrt(
    n_levels: int,
    bands: int,
    true_levels: Sequence[int],
    mode: str = "full",
    n_pairs: int | None = None,
    seed: int | None = None,
    similarity: Similarity | None = None,
    max_pairs: int = DEFAULT_PAIR_BUDGET,
    force: bool = False,
) -> RatioTable:
    """Tournament over all (or sampled) unordered pairs of distinct gain sets.

    ``similarity=None`` selects the fast vectorized negative-Euclidean
    oracle; a custom callable drops to a row-by-row path.
    """
    t = np.asarray(true_levels, dtype=np.int64)
    if t.shape != (bands,):
        raise DomainError(f"true gain set must have {bands} entries")
    if np.any(t < 1) or np.any(t > n_levels):
        raise DomainError("true gain set outside the level range")
    tables = CountTables.zeros(n_levels, bands)

    if mode == "full":
        space = n_levels**bands
        total_pairs = space * (space - 1) // 2
        if total_pairs > max_pairs and not force:
            raise ConfigurationError(
                f"full mode needs {total_pairs} pairs, above the budget of "
                f"{max_pairs}; pass force=True to run it anyway"
            )
        sets = enumerate_gain_sets(n_levels, bands)
        for i in range(space - 1):
            c2 = sets[i + 1 :]
            c1 = np.broadcast_to(sets[i], c2.shape)
            outcome = _batch_outcomes(c1, c2, t, similarity)
            accumulate_batch(tables, c1, c2, outcome)
    elif mode == "sampled":
        if n_pairs is None or n_pairs < 1:
            raise ConfigurationError("sampled mode requires n_pairs >= 1")
        rng = np.random.default_rng(seed)
        remaining = n_pairs
        while remaining > 0:
            m = min(_CHUNK, remaining)
            c1 = rng.integers(1, n_levels + 1, size=(m, bands))
            c2 = rng.integers(1, n_levels + 1, size=(m, bands))
            equal = np.all(c1 == c2, axis=1)
            while np.any(equal):
                k = int(equal.sum())
                c2[equal] = rng.integers(1, n_levels + 1, size=(k, bands))
                equal = np.all(c1 == c2, axis=1)
            outcome = _batch_outcomes(c1, c2, t, similarity)
            accumulate_batch(tables, c1, c2, outcome)
            remaining -= m
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")

    return RatioTable(ratio=tables.ratio(), counts=tables)


@dataclass
class IndependenceReport:
    trials: int
    matches: int
    mismatched_cases: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "matches": self.matches,
            "mismatched_cases": self.mismatched_cases,
        }


def validate_independence(
    trials: int,
    n_levels: int,
    bands: int,
    mode: str = "full",
    seed: int = 0,
    n_pairs: int | None = None,
    similarity: Similarity | None = None,
    max_pairs: int = DEFAULT_PAIR_BUDGET,
    force: bool = False,
) -> IndependenceReport:
    """Random true gain sets; checks that the ratio argmax recovers each one."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    report = IndependenceReport(trials=trials, matches=0)
    for trial in range(trials):
        t = rng.integers(1, n_levels + 1, size=bands)
        table = run_rrt(
            n_levels,
            bands,
            t,
            mode=mode,
            n_pairs=n_pairs,
            seed=int(rng.integers(0, 2**32)),
            similarity=similarity,
            max_pairs=max_pairs,
            force=force,
        )
        recovered = table.argmax_levels()
        if recovered == tuple(int(v) for v in t):
            report.matches += 1
        else:
            report.mismatched_cases.append(
                {
                    "trial": trial,
                    "true_levels": [int(v) for v in t],
                    "recovered_levels": list(recovered),
                    "ratio": table.ratio.tolist(),
                }
            )
    return report


# --- export helpers -----------------------------------------------------


def table_to_csv(table: np.ndarray, path) -> None:
    """Levels as rows (1-based), bands as columns."""
    table = np.asarray(table)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level"] + [f"band{b + 1}" for b in range(table.shape[1])])
        for i, row in enumerate(table):
            writer.writerow([i + 1] + [f"{v:.6g}" for v in row])


def ratio_table_to_json(table: RatioTable, path) -> None:
    payload = {
        "ratio": table.ratio.tolist(),
        "preference": table.counts.preference.tolist(),
        "occurrence": table.counts.occurrence.tolist(),
        "argmax_levels": list(table.argmax_levels()),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
