"""Multi-band fitting session: schedules, feedback intake, episode refits.

One stream of paired-comparison answers drives B independent single-band
learners. Every presentation pairs two full gain sets that differ in every
band; a choice of A (or B) is credited to each band as a comparison between
that band's two levels. "Same" answers are logged but excluded from the
likelihood.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .config import BandConfig
from .errors import (
    ConfigurationError,
    DomainError,
    HearfitError,
    OrderingError,
    StateError,
)
from .preference import (
    DEFAULT_BOUNDS,
    Comparison,
    Hyperparams,
    best_level,
    fit_hyperparams,
    kernel_matrix,
    laplace_mode,
)

EVENT_SCHEMA = "hearfit.feedback.v1"
DEFAULT_HP_INIT = Hyperparams(2.0, 1.0)


@dataclass(frozen=True)
class Schedule:
    """Per-band permutations of all unordered level pairs, cut into episodes."""

    per_band: tuple[tuple[tuple[int, int], ...], ...]
    episodes: int
    per_episode: int

    @property
    def n_bands(self) -> int:
        return len(self.per_band)

    @property
    def total_pairs(self) -> int:
        return self.episodes * self.per_episode


def build_schedule(
    n_levels: int, episodes: int, per_episode: int, bands: int, seed: int
) -> Schedule:
    """Independent seeded shuffle of the complete pair list for each band.

    Band b's permutation depends only on (seed, b), so dropping a band never
    perturbs the others' schedules.
    """
    pairs = list(itertools.combinations(range(1, n_levels + 1), 2))
    if episodes * per_episode != len(pairs):
        raise ConfigurationError(
            f"episodes*per_episode = {episodes * per_episode} but there are "
            f"{len(pairs)} level pairs"
        )
    per_band = []
    for b in range(bands):
        rng = np.random.default_rng([int(seed), b])
        order = rng.permutation(len(pairs))
        # Random orientation per pair: with a fixed low-level-first order,
        # side A would be systematically "louder" in every band at once and
        # a cross-band answer signal would leak into each band's labels.
        flip = rng.integers(0, 2, size=len(pairs))
        shuffled = []
        for i in order:
            a, b_ = pairs[i]
            shuffled.append((b_, a) if flip[i] else (a, b_))
        per_band.append(tuple(shuffled))
    return Schedule(per_band=tuple(per_band), episodes=episodes, per_episode=per_episode)


@dataclass(frozen=True)
class Presentation:
    id: int
    gain_set_a: tuple[int, ...]
    gain_set_b: tuple[int, ...]


@dataclass
class BandState:
    f: np.ndarray
    hp: Hyperparams
    comparisons: list[Comparison] = field(default_factory=list)


@dataclass(frozen=True)
class FittingResult:
    personalized_levels: tuple[int, ...]
    personalized_gains_db: tuple[float, ...]


class BandUpdateError(HearfitError):
    """One or more bands failed to refit; the others were still updated."""

    def __init__(self, failures: list[tuple[int, Exception]]):
        super().__init__(
            "band refits failed: "
            + "; ".join(f"band {b}: {e}" for b, e in failures)
        )
        self.failures = failures


class FittingSession:
    """Owns the mutable state of one fitting run.

    Mutations must be serialized by the caller (the service keeps one lock
    per session); the per-band refits inside :meth:`finish_episode` are
    independent of each other.
    """

    def __init__(
        self,
        config: BandConfig,
        schedule: Schedule,
        hp_init: Hyperparams = DEFAULT_HP_INIT,
        hp_bounds=DEFAULT_BOUNDS,
    ):
        if schedule.n_bands != config.n_bands:
            raise ConfigurationError(
                f"schedule has {schedule.n_bands} bands, config {config.n_bands}"
            )
        self.config = config
        self.schedule = schedule
        self.hp_bounds = hp_bounds
        self.bands = [
            BandState(f=np.zeros(config.n_levels), hp=hp_init)
            for _ in range(config.n_bands)
        ]
        self.cursor = 0
        self.episodes_done = 0
        self.events: list[dict] = []

    @property
    def complete(self) -> bool:
        return self.cursor >= self.schedule.total_pairs

    @property
    def current_episode(self) -> int:
        """1-based episode the next presentation belongs to."""
        return min(self.cursor // self.schedule.per_episode, self.schedule.episodes - 1) + 1

    def next_comparison(self) -> Presentation:
        if self.complete:
            raise StateError("session complete: schedule exhausted")
        a = tuple(self.schedule.per_band[b][self.cursor][0] for b in range(self.config.n_bands))
        b = tuple(self.schedule.per_band[b][self.cursor][1] for b in range(self.config.n_bands))
        return Presentation(id=self.cursor, gain_set_a=a, gain_set_b=b)

    def record_feedback(self, presentation_id: int, choice: str, timestamp: float | None = None) -> bool:
        """Apply one answer; returns True when it closed an episode."""
        if self.complete:
            raise StateError("session complete: no feedback expected")
        if presentation_id != self.cursor:
            raise OrderingError(
                f"feedback for presentation {presentation_id}, expected {self.cursor}"
            )
        if choice not in ("A", "B", "Same"):
            raise DomainError(f"choice must be A, B or Same, got {choice!r}")
        pairs = [self.schedule.per_band[b][self.cursor] for b in range(self.config.n_bands)]
        if choice != "Same":
            d = 1 if choice == "A" else -1
            for band, (a, b) in enumerate(pairs):
                self.bands[band].comparisons.append(Comparison(a=a, b=b, d=d))
        self.events.append(
            {
                "schema": EVENT_SCHEMA,
                "type": "feedback",
                "presentation_id": self.cursor,
                "pairs": [list(p) for p in pairs],
                "choice": choice,
                "ts": time.time() if timestamp is None else timestamp,
            }
        )
        self.cursor += 1
        return self.cursor % self.schedule.per_episode == 0

    def finish_episode(self) -> None:
        """Refit every band on all comparisons so far, warm-started.

        Per band: Newton mode from the previous episode's f, then a
        hyperparameter update from the previous (lam, sigma), then the mode
        again under the new hyperparameters so the stored f is stationary
        for the stored hyperparameters. A failing band does not block the
        others; failures are re-raised together afterwards.
        """
        if self.cursor % self.schedule.per_episode != 0 or self.cursor == 0:
            raise StateError("finish_episode called off an episode boundary")
        failures: list[tuple[int, Exception]] = []
        for b, bs in enumerate(self.bands):
            try:
                K = kernel_matrix(self.config.n_levels, bs.hp.lam)
                f_warm = laplace_mode(K, bs.comparisons, bs.hp.sigma, f_init=bs.f)
                hp = fit_hyperparams(
                    bs.comparisons, self.config.n_levels, bounds=self.hp_bounds, init=bs.hp
                )
                K2 = kernel_matrix(self.config.n_levels, hp.lam)
                bs.f = laplace_mode(K2, bs.comparisons, hp.sigma, f_init=f_warm)
                bs.hp = hp
            except HearfitError as exc:
                failures.append((b, exc))
        self.episodes_done = self.cursor // self.schedule.per_episode
        if failures:
            raise BandUpdateError(failures)

    def personalized_gains(
        self,
        prescription_db,
        floor_db=None,
        ceiling_db=None,
    ) -> FittingResult:
        if not self.complete:
            raise StateError("training incomplete: schedule not exhausted")
        prescription = [float(g) for g in prescription_db]
        if len(prescription) != self.config.n_bands:
            raise DomainError(
                f"prescription has {len(prescription)} bands, expected {self.config.n_bands}"
            )
        levels = tuple(best_level(bs.f) for bs in self.bands)
        gains = [p + self.config.level_to_db(lv) for p, lv in zip(prescription, levels)]
        if floor_db is not None:
            gains = [max(g, float(lo)) for g, lo in zip(gains, floor_db)]
        if ceiling_db is not None:
            gains = [min(g, float(hi)) for g, hi in zip(gains, ceiling_db)]
        return FittingResult(personalized_levels=levels, personalized_gains_db=tuple(gains))

    # --- feedback-log serialization -------------------------------------

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)

    def apply_event(self, event: dict) -> None:
        """Replay one logged feedback event, refitting at episode boundaries."""
        expected = self.next_comparison()
        pairs = [list(self.schedule.per_band[b][self.cursor]) for b in range(self.config.n_bands)]
        if event.get("presentation_id") != expected.id or event.get("pairs") != pairs:
            raise OrderingError(
                f"event {event.get('presentation_id')} does not match cursor {self.cursor}"
            )
        if self.record_feedback(expected.id, event["choice"], timestamp=event.get("ts")):
            self.finish_episode()


def replay_session(
    config: BandConfig,
    schedule: Schedule,
    events,
    hp_init: Hyperparams = DEFAULT_HP_INIT,
    hp_bounds=DEFAULT_BOUNDS,
) -> FittingSession:
    """Rebuild a session deterministically from its feedback log."""
    session = FittingSession(config, schedule, hp_init=hp_init, hp_bounds=hp_bounds)
    for event in events:
        session.apply_event(event)
    return session


def parse_events_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]
