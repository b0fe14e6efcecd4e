"""Band layout and adjustment-level configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError, DomainError

# Five clinical bands: 0-500, 500-1000, 1000-2000, 2000-4000, 4000-6000 Hz.
DEFAULT_BAND_EDGES_HZ: tuple[float, ...] = (0.0, 500.0, 1000.0, 2000.0, 4000.0, 6000.0)

# Eight adjustment levels, index 1..8 -> dB offset around the prescription.
DEFAULT_LEVEL_DB: tuple[float, ...] = (12.0, 9.0, 6.0, 3.0, 0.0, -3.0, -6.0, -9.0)


@dataclass(frozen=True)
class BandConfig:
    """Frequency bands and the per-band adjustment-level grid."""

    band_edges_hz: tuple[float, ...] = DEFAULT_BAND_EDGES_HZ
    n_levels: int = 8
    level_db: tuple[float, ...] = DEFAULT_LEVEL_DB

    def __post_init__(self):
        edges = tuple(float(e) for e in self.band_edges_hz)
        object.__setattr__(self, "band_edges_hz", edges)
        object.__setattr__(self, "level_db", tuple(float(g) for g in self.level_db))
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ConfigurationError(f"band edges must be strictly ascending: {edges}")
        if self.n_levels < 2:
            raise ConfigurationError("need at least two adjustment levels")
        if len(self.level_db) != self.n_levels:
            raise ConfigurationError(
                f"level_db has {len(self.level_db)} entries, expected {self.n_levels}"
            )

    @property
    def n_bands(self) -> int:
        return len(self.band_edges_hz) - 1

    def level_to_db(self, level: int) -> float:
        """dB offset for a 1-based adjustment-level index."""
        if not 1 <= level <= self.n_levels:
            raise DomainError(f"level index {level} outside [1, {self.n_levels}]")
        return self.level_db[level - 1]

    def band_centers_hz(self) -> tuple[float, ...]:
        """Arithmetic midpoints of the band edges (interpolation anchors)."""
        e = self.band_edges_hz
        return tuple((a + b) / 2.0 for a, b in zip(e, e[1:]))

    def validate_gain_set(self, levels) -> tuple[int, ...]:
        levels = tuple(int(v) for v in levels)
        if len(levels) != self.n_bands:
            raise DomainError(f"gain set has {len(levels)} bands, expected {self.n_bands}")
        for v in levels:
            if not 1 <= v <= self.n_levels:
                raise DomainError(f"level {v} outside [1, {self.n_levels}]")
        return levels
