"""Synthetic speech-like stimulus corpus.

Real fitting sessions would use recorded sentences; for tests and demos this
module synthesizes short harmonic "sentences" (glottal-pulse-like harmonic
stacks shaped by slowly wandering formant resonances and a syllabic energy
envelope) and a multi-talker babble bed. The clips are deterministic for a
given seed, mono, and spectrally broadband across the five fitting bands so
that every band's gain changes are audible in the rendered stimuli.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dsp import DEFAULT_SAMPLE_RATE, AudioClip, wav_write
from .errors import DomainError

DEFAULT_SENTENCE_S = 2.5
DEFAULT_CORPUS_SIZE = 8
_PEAK = 0.5


def synth_sentence(
    seed: int,
    duration_s: float = DEFAULT_SENTENCE_S,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
) -> AudioClip:
    """One deterministic speech-like clip."""
    if duration_s <= 0:
        raise DomainError("duration must be positive")
    rng = np.random.default_rng([0x5EED, seed])
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz

    # Wandering fundamental around a per-sentence pitch.
    f0 = rng.uniform(95.0, 220.0)
    vibrato = 1.0 + 0.03 * np.sin(2 * np.pi * rng.uniform(3.0, 6.0) * t + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * np.cumsum(f0 * vibrato) / sample_rate_hz

    # Harmonic stack with a gentle spectral tilt, shaped by three formant
    # resonances that drift slowly over the sentence.
    formants = rng.uniform([300, 900, 2200], [800, 1800, 3200])
    drift = rng.uniform(0.85, 1.15, size=(3, 1))
    centers = formants[:, None] * (1.0 + (drift - 1.0) * np.linspace(0, 1, n))
    widths = np.array([150.0, 250.0, 400.0])[:, None]
    x = np.zeros(n)
    max_h = int((sample_rate_hz / 2 - 200) // f0)
    for h in range(1, min(max_h, 40) + 1):
        fh = h * f0
        resonance = np.sum(np.exp(-((fh - centers) ** 2) / (2 * widths**2)), axis=0)
        x += (resonance + 0.05) / h**0.5 * np.sin(h * phase + rng.uniform(0, 2 * np.pi))

    # A little aspiration noise keeps the top band alive.
    x += 0.02 * rng.standard_normal(n)

    # Syllabic on/off energy envelope with soft edges.
    syllable_rate = rng.uniform(2.5, 4.5)
    envelope = 0.55 + 0.45 * np.sin(2 * np.pi * syllable_rate * t + rng.uniform(0, 2 * np.pi))
    fade = min(n // 20, int(0.05 * sample_rate_hz))
    ramp = np.ones(n)
    ramp[:fade] = np.linspace(0, 1, fade)
    ramp[-fade:] = np.linspace(1, 0, fade)
    x *= envelope * ramp

    x *= _PEAK / np.max(np.abs(x))
    return AudioClip(x, sample_rate_hz, metadata={"sentence_seed": seed})


def synth_babble(
    seed: int,
    duration_s: float = 4.0,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
    talkers: int = 8,
) -> AudioClip:
    """Multi-talker babble: overlapping desynchronized synthetic voices."""
    if talkers < 1:
        raise DomainError("talkers must be >= 1")
    n = int(round(duration_s * sample_rate_hz))
    mix = np.zeros(n)
    rng = np.random.default_rng([0xBABB1E, seed])
    for k in range(talkers):
        voice = synth_sentence(int(rng.integers(1 << 30)), duration_s, sample_rate_hz)
        offset = int(rng.integers(n))
        mix += np.roll(voice.samples, offset)
    mix *= _PEAK / np.max(np.abs(mix))
    return AudioClip(mix, sample_rate_hz, metadata={"babble_seed": seed})


def make_demo_corpus(
    directory,
    n_sentences: int = DEFAULT_CORPUS_SIZE,
    duration_s: float = DEFAULT_SENTENCE_S,
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
    seed: int = 0,
    with_babble: bool = True,
) -> list[Path]:
    """Write a directory of sentence WAVs (plus babble.wav); returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_sentences):
        clip = synth_sentence(seed * 10_000 + i, duration_s, sample_rate_hz)
        path = directory / f"sentence_{i:03d}.wav"
        wav_write(clip, path)
        paths.append(path)
    if with_babble:
        path = directory / "babble.wav"
        wav_write(synth_babble(seed, max(duration_s * 2, 4.0), sample_rate_hz), path)
        paths.append(path)
    return paths


def load_sentences(
    directory, duration_s: float | None = None, sample_rate_hz: int | None = None
) -> list[AudioClip]:
    """Load all non-babble WAVs, sorted by name, trimmed/looped to duration."""
    from .dsp import wav_read

    directory = Path(directory)
    files = sorted(p for p in directory.glob("*.wav") if p.stem != "babble")
    if not files:
        raise DomainError(f"no sentence WAVs in {directory}")
    clips = []
    for path in files:
        clip = wav_read(path)
        if sample_rate_hz is not None and clip.sample_rate_hz != sample_rate_hz:
            raise DomainError(f"{path} has sample rate {clip.sample_rate_hz}, expected {sample_rate_hz}")
        if duration_s is not None:
            n = int(round(duration_s * clip.sample_rate_hz))
            samples = clip.samples
            if samples.size < n:
                samples = np.tile(samples, int(np.ceil(n / samples.size)))
            clip = AudioClip(samples[:n], clip.sample_rate_hz, dict(clip.metadata))
        clips.append(clip)
    return clips
