"""Synthetic voice generation for tests, demos, and desk-scale studies.

Voices are built source-filter style: a glottal-like pulse train (or
sawtooth) excites a cascade of second-order resonators placed at known
formant frequencies. Because every parameter is chosen, these signals act
as ground truth for the pitch tracker, the formant estimator, and the
end-to-end scoring pipeline.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from .audio import AudioBuffer

DEFAULT_FORMANTS = (500.0, 1500.0, 2500.0, 3500.0)
DEFAULT_BANDWIDTHS = (80.0, 120.0, 160.0, 200.0)


def sawtooth(f0: float, duration: float, sr: int = 16000, amplitude: float = 0.5) -> AudioBuffer:
    """Bandlimited-enough sawtooth for pitch tests (naive phase ramp)."""
    t = np.arange(int(round(duration * sr))) / sr
    phase = f0 * t
    return AudioBuffer(amplitude * (2.0 * (phase % 1.0) - 1.0), sr)


def pulse_train(f0: float | np.ndarray, n: int, sr: int) -> np.ndarray:
    """Unit impulses at every integer crossing of the accumulated phase.

    ``f0`` may be a scalar or a length-``n`` contour in Hz.
    """
    f0 = np.broadcast_to(np.asarray(f0, dtype=np.float64), (n,))
    phase = np.cumsum(f0 / sr)
    ticks = np.floor(phase)
    out = np.zeros(n)
    out[1:][ticks[1:] > ticks[:-1]] = 1.0
    out[0] = 1.0
    return out


def resonator_cascade(x: np.ndarray, formants, bandwidths, sr: int) -> np.ndarray:
    """Filter through all-pole resonators 1/(1 - 2r cos(th) z^-1 + r^2 z^-2)."""
    y = np.asarray(x, dtype=np.float64)
    for f, bw in zip(formants, bandwidths):
        r = np.exp(-np.pi * bw / sr)
        theta = 2.0 * np.pi * f / sr
        y = lfilter([1.0], [1.0, -2.0 * r * np.cos(theta), r * r], y)
    return y


def glottal_shape(pulses: np.ndarray, poles: int = 1) -> np.ndarray:
    """Give an impulse source the spectral slope of glottal flow at the
    lips (flow derivative: about -6 dB/octave per pole)."""
    y = pulses
    for _ in range(poles):
        y = lfilter([1.0], [1.0, -0.98], y)
    return y


def synth_vowel(
    f0: float,
    duration: float,
    sr: int = 16000,
    formants=DEFAULT_FORMANTS,
    bandwidths=DEFAULT_BANDWIDTHS,
    amplitude: float = 0.5,
) -> AudioBuffer:
    """Steady synthetic vowel with known resonances."""
    n = int(round(duration * sr))
    source = glottal_shape(pulse_train(f0, n, sr))
    y = resonator_cascade(source, formants, bandwidths, sr)
    peak = np.max(np.abs(y))
    return AudioBuffer(y * (amplitude / peak if peak > 0 else 1.0), sr)


def read_speech_envelope(
    n: int,
    sr: int,
    rng: np.random.Generator,
    syllable_rate: float = 4.0,
    phrase_syllables: tuple[int, int] = (6, 11),
    pause_ms: tuple[float, float] = (250.0, 450.0),
) -> np.ndarray:
    """Syllabic amplitude modulation with phrase-final pauses.

    Raised-cosine bumps at roughly ``syllable_rate`` per second, grouped
    into phrases separated by silent pauses, as in read-aloud speech.
    """
    env = np.zeros(n)
    period = sr / syllable_rate
    pos = 0
    left = int(rng.integers(phrase_syllables[0], phrase_syllables[1]))
    while pos < n:
        if left == 0:
            pos += int(rng.uniform(*pause_ms) / 1000.0 * sr)
            left = int(rng.integers(phrase_syllables[0], phrase_syllables[1]))
            continue
        dur = int(period * rng.uniform(0.8, 1.0))
        bump = rng.uniform(0.55, 1.0) * np.hanning(dur)
        end = min(pos + dur, n)
        env[pos:end] = np.maximum(env[pos:end], bump[: end - pos])
        pos += int(period * rng.uniform(0.95, 1.1))
        left -= 1
    return env


def synth_read_speech(
    f0: float,
    duration: float,
    sr: int = 16000,
    formant_scale: float = 1.0,
    seed: int = 0,
    amplitude: float = 0.7,
    formants=DEFAULT_FORMANTS,
    bandwidths=DEFAULT_BANDWIDTHS,
) -> AudioBuffer:
    """Read-speech-like voice: pulse-train source, fixed vocal-tract
    resonances scaled by ``formant_scale``, vibrato plus declination on the
    pitch contour, and syllabic amplitude modulation with pauses."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sr))
    t = np.arange(n) / sr

    vibrato = 1.0 + 0.015 * np.sin(2.0 * np.pi * rng.uniform(4.0, 5.5) * t + rng.uniform(0, 2 * np.pi))
    declination = np.linspace(1.03, 0.95, n)
    contour = f0 * vibrato * declination

    source = glottal_shape(pulse_train(contour, n, sr))
    y = resonator_cascade(source, [f * formant_scale for f in formants], bandwidths, sr)
    y *= read_speech_envelope(n, sr, rng)

    peak = np.max(np.abs(y))
    if peak > 0:
        y *= amplitude / peak
    return AudioBuffer(y, sr)


def encode_wav_pcm16(buf: AudioBuffer) -> bytes:
    """Serialize a buffer as a 16-bit PCM WAV file (testing convenience)."""
    import struct

    pcm = (np.clip(buf.samples, -1.0, 1.0) * 32767.0).astype("<i2")
    body = pcm.tobytes()
    header = (
        b"RIFF"
        + struct.pack("<I", 36 + len(body))
        + b"WAVEfmt "
        + struct.pack("<IHHIIHH", 16, 1, 1, buf.sample_rate, buf.sample_rate * 2, 2, 16)
        + b"data"
        + struct.pack("<I", len(body))
    )
    return header + body
