"""Audio rendering chain: gain curve -> FIR filter -> filtered, noise-mixed clips.

Band gains are anchored at band-center frequencies, crossfaded with a raised
cosine on a log-frequency axis, realized as a 64-tap linear-phase FIR by a
weighted least-squares magnitude fit, and applied by convolution. Babble (or
any) noise is mixed at an exact RMS-defined SNR.
"""

from __future__ import annotations

import io
import math
import wave
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import freqz, lfilter

from .config import BandConfig
from .errors import DesignError, DomainError, FormatError

DEFAULT_SAMPLE_RATE = 16_000
FIR_TAPS = 64
_MEASURE_NFFT = 4096
BAND_CENTER_TOL_DB = 1.0
# Least-squares design grid: log-spaced to give the low bands the resolution
# they need; the region above _DESIGN_CARE_HZ is don't-care (a symmetric
# even-length FIR is forced to zero at Nyquist anyway).
_DESIGN_GRID_POINTS = 1024
_DESIGN_GRID_LO_HZ = 20.0
_DESIGN_CARE_FRACTION = 0.9375  # of Nyquist
_ANCHOR_WEIGHT = 50.0


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.size == 0:
            raise DomainError("audio clip is empty")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2)))


@dataclass(frozen=True)
class FrequencyResponse:
    grid_hz: np.ndarray
    gain_db: np.ndarray
    anchors_hz: tuple[float, ...] = ()
    anchors_db: tuple[float, ...] = ()

    def gain_at(self, freqs_hz) -> np.ndarray:
        return np.interp(np.asarray(freqs_hz, dtype=float), self.grid_hz, self.gain_db)


@dataclass(frozen=True)
class FirFilter:
    coefficients: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))

    def magnitude_db(self, freqs_hz, nfft: int = _MEASURE_NFFT) -> np.ndarray:
        w, h = freqz(self.coefficients, worN=nfft, fs=self.sample_rate_hz)
        mag = 20.0 * np.log10(np.maximum(np.abs(h), 1e-12))
        return np.interp(np.asarray(freqs_hz, dtype=float), w, mag)


def level_to_db(level: int, config: BandConfig | None = None) -> float:
    """dB offset of a 1-based adjustment level (default map +12 .. -9)."""
    return (config or BandConfig()).level_to_db(level)


def interpolate_response(
    band_gains_db: Sequence[float],
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
    config: BandConfig | None = None,
    n_grid: int = 1025,
) -> FrequencyResponse:
    """Smooth response through the band-center anchors.

    Raised-cosine crossfade between adjacent anchors on a log-frequency axis;
    constant extension below the first anchor and up to Nyquist above the
    last one.
    """
    config = config or BandConfig()
    gains = np.asarray(band_gains_db, dtype=float)
    anchors = np.asarray(config.band_centers_hz(), dtype=float)
    if gains.shape != anchors.shape:
        raise DomainError(f"expected {anchors.size} band gains, got {gains.size}")
    nyquist = sample_rate_hz / 2.0
    grid = np.linspace(0.0, nyquist, n_grid)
    gain_db = _cosine_interp(grid, anchors, gains)
    return FrequencyResponse(
        grid_hz=grid,
        gain_db=gain_db,
        anchors_hz=tuple(anchors),
        anchors_db=tuple(gains),
    )


def _cosine_interp(freqs: np.ndarray, anchors: np.ndarray, gains: np.ndarray) -> np.ndarray:
    log_f = np.log(np.maximum(freqs, 1e-3))
    log_a = np.log(anchors)
    out = np.empty_like(log_f)
    out[freqs <= anchors[0]] = gains[0]
    out[freqs >= anchors[-1]] = gains[-1]
    for lo in range(anchors.size - 1):
        mask = (freqs >= anchors[lo]) & (freqs <= anchors[lo + 1])
        if not np.any(mask):
            continue
        u = (log_f[mask] - log_a[lo]) / (log_a[lo + 1] - log_a[lo])
        w = 0.5 - 0.5 * np.cos(np.pi * u)
        out[mask] = (1.0 - w) * gains[lo] + w * gains[lo + 1]
    return out


def design_fir(
    response: FrequencyResponse,
    taps: int = FIR_TAPS,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
    check_tolerance_db: float = BAND_CENTER_TOL_DB,
) -> FirFilter:
    """Linear-phase FIR fitted to the sampled target magnitude.

    Even-length symmetric (type II) filters have amplitude
    A(w) = sum_m c_m cos(w (m + 1/2)), which is linear in the coefficients,
    so the design reduces to a weighted least-squares fit of A to the target
    magnitude on a dense log-spaced grid. Weights are inversely proportional
    to the target amplitude, making the fit minimize (approximately) dB
    error, and the band above ~94% of Nyquist is don't-care because the
    type II structure forces a zero at Nyquist. If the measured magnitude at
    any anchor deviates by more than ``check_tolerance_db``, a DesignError
    reports the worst case.
    """
    if taps < 2 or taps % 2 != 0:
        raise DomainError("taps must be an even count >= 2")
    nyquist = sample_rate_hz / 2.0
    grid = np.concatenate(
        (
            [0.0],
            np.geomspace(_DESIGN_GRID_LO_HZ, nyquist * _DESIGN_CARE_FRACTION,
                         _DESIGN_GRID_POINTS),
        )
    )
    weights = np.ones(grid.size)
    if response.anchors_hz:
        # The accuracy contract is at the anchors; make them near-constraints.
        anchors = np.asarray(response.anchors_hz)
        anchors = anchors[anchors < nyquist]
        grid = np.concatenate((grid, anchors))
        weights = np.concatenate((weights, np.full(anchors.size, _ANCHOR_WEIGHT)))
    target = 10.0 ** (response.gain_at(grid) / 20.0)
    omega = np.pi * grid / nyquist
    half = taps // 2
    basis = np.cos(omega[:, None] * (np.arange(half) + 0.5))
    weights = weights / np.maximum(target, 1e-3)
    coeffs, *_ = np.linalg.lstsq(basis * weights[:, None],
                                 target * weights, rcond=None)
    h = np.empty(taps)
    h[half - 1 :: -1] = coeffs / 2.0  # h[half-1-m] = c_m / 2
    h[half:] = h[half - 1 :: -1]

    fir = FirFilter(coefficients=h, sample_rate_hz=sample_rate_hz)
    if response.anchors_hz:
        anchors = np.asarray(response.anchors_hz)
        usable = anchors < nyquist
        measured = fir.magnitude_db(anchors[usable])
        deviation = np.abs(measured - np.asarray(response.anchors_db)[usable])
        worst = float(np.max(deviation)) if deviation.size else 0.0
        if worst > check_tolerance_db:
            raise DesignError(
                f"band-center deviation {worst:.2f} dB exceeds "
                f"{check_tolerance_db} dB",
                worst_deviation_db=worst,
            )
    return fir


def _peak_guard(samples: np.ndarray, metadata: dict) -> np.ndarray:
    peak = float(np.max(np.abs(samples)))
    if peak > 1.0:
        metadata["peak_guard_factor"] = 1.0 / peak
        return samples / peak
    metadata["peak_guard_factor"] = 1.0
    return samples


def apply_gain_set(
    clip: AudioClip,
    gain_set: Sequence[int],
    prescription_db: Sequence[float],
    config: BandConfig | None = None,
) -> AudioClip:
    """Filter a clip with the response of prescription + level offsets."""
    config = config or BandConfig()
    levels = config.validate_gain_set(gain_set)
    prescription = np.asarray(prescription_db, dtype=float)
    if prescription.shape != (config.n_bands,):
        raise DomainError(f"prescription must have {config.n_bands} entries")
    gains = prescription + np.array([config.level_to_db(v) for v in levels])
    response = interpolate_response(gains, clip.sample_rate_hz, config)
    fir = design_fir(response, sample_rate_hz=clip.sample_rate_hz)
    out = lfilter(fir.coefficients, [1.0], clip.samples)
    metadata = dict(clip.metadata)
    out = _peak_guard(out, metadata)
    return AudioClip(out, clip.sample_rate_hz, metadata)


def mix_noise(
    clean: AudioClip,
    noise: AudioClip,
    snr_db: float,
    loop_offset_seed: int | None = None,
) -> AudioClip:
    """Add noise scaled so 10 log10(P_clean / P_noise) equals snr_db.

    ``snr_db=inf`` returns the clean clip. Shorter noise is looped, with a
    seeded random start offset when a seed is given.
    """
    if clean.sample_rate_hz != noise.sample_rate_hz:
        raise DomainError("sample rates differ")
    if math.isinf(snr_db) and snr_db > 0:
        return AudioClip(clean.samples.copy(), clean.sample_rate_hz, dict(clean.metadata))
    n = clean.samples.size
    noise_samples = noise.samples
    if noise_samples.size < n:
        offset = 0
        if loop_offset_seed is not None:
            offset = int(np.random.default_rng(loop_offset_seed).integers(noise_samples.size))
        reps = int(np.ceil((n + offset) / noise_samples.size))
        noise_samples = np.tile(noise_samples, reps)[offset : offset + n]
    else:
        noise_samples = noise_samples[:n]
    p_clean = float(np.mean(clean.samples**2))
    p_noise = float(np.mean(noise_samples**2))
    if p_clean <= 0 or p_noise <= 0:
        raise DomainError("zero-power input to mix_noise")
    scale = math.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    metadata = dict(clean.metadata)
    mixed = _peak_guard(clean.samples + scale * noise_samples, metadata)
    return AudioClip(mixed, clean.sample_rate_hz, metadata)


# --- WAV I/O (16-bit PCM mono) -------------------------------------------


def wav_read(path) -> AudioClip:
    """Read 16-bit PCM WAV; stereo is downmixed by channel averaging."""
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"cannot read WAV {path}: {exc}") from exc
    if sampwidth != 2:
        raise FormatError(f"only 16-bit PCM supported, got sample width {sampwidth}")
    data = np.frombuffer(frames, dtype="<i2").astype(float) / 32768.0
    if channels > 1:
        data = data.reshape(-1, channels).mean(axis=1)
    if data.size == 0:
        raise FormatError(f"WAV {path} contains no samples")
    return AudioClip(data, rate)


def wav_write(clip: AudioClip, path) -> None:
    samples = np.clip(clip.samples, -1.0, 1.0)
    pcm = np.round(samples * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate_hz)
        wf.writeframes(pcm.tobytes())


def wav_bytes(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    samples = np.clip(clip.samples, -1.0, 1.0)
    pcm = np.round(samples * 32767.0).astype("<i2")
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate_hz)
        wf.writeframes(pcm.tobytes())
    return buf.getvalue()


def fir_to_csv(fir: FirFilter, path) -> None:
    with open(path, "w") as fh:
        fh.write("index,coefficient\n")
        for i, c in enumerate(fir.coefficients):
            fh.write(f"{i},{c!r}\n")
