"""Audio decoding and rate conversion.

Everything downstream operates on an :class:`AudioBuffer`: mono float
samples in [-1, 1] at the canonical 16 kHz rate. :func:`load_wav` accepts
RIFF/WAVE bytes (PCM 16-bit or IEEE float, mono or stereo, any rate) and
normalizes to that form. :func:`resample` is a band-limited windowed-sinc
converter, also used internally to reach the 11 kHz rate used for formant
analysis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedContainer, UnsupportedEncoding

CANONICAL_RATE = 16000

# Windowed-sinc resampler: 64 taps, Kaiser beta 8.6 (~80 dB stopband).
_TAPS = 64
_HALF = _TAPS // 2
_KAISER_BETA = 8.6
_CHUNK = 32768


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio: immutable samples plus their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and not np.isfinite(samples).all():
            raise ValueError("samples contain non-finite values")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self.samples) / self.sample_rate


def _parse_chunks(data: bytes):
    """Yield (chunk_id, payload_offset, declared_size) for each RIFF chunk."""
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        yield cid, pos + 8, size
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def load_wav(data: bytes) -> AudioBuffer:
    """Decode WAV bytes to a mono 16 kHz AudioBuffer.

    Accepts PCM 16-bit and IEEE float (32/64-bit) encodings, 1 or 2
    channels, at any source rate. Stereo is averaged to mono; the result
    is resampled to 16 kHz and clamped to [-1, 1].

    Raises:
        MalformedContainer: not RIFF/WAVE, missing chunks, truncated data.
        UnsupportedEncoding: compressed codecs, other bit depths, >2 channels.
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedContainer("not a RIFF/WAVE container")

    fmt = None
    data_span = None
    for cid, off, size in _parse_chunks(data):
        if cid == b"fmt " and fmt is None:
            if size < 16 or off + 16 > len(data):
                raise MalformedContainer("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", data, off)
            fmt_size, fmt_off = size, off
        elif cid == b"data" and data_span is None:
            data_span = (off, size)
    if fmt is None:
        raise MalformedContainer("missing fmt chunk")
    if data_span is None:
        raise MalformedContainer("missing data chunk")

    format_tag, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if format_tag == 0xFFFE:  # WAVE_FORMAT_EXTENSIBLE: sub-format GUID leads with the real tag
        if fmt_size < 40 or fmt_off + 26 > len(data):
            raise MalformedContainer("extensible fmt chunk too small")
        (format_tag,) = struct.unpack_from("<H", data, fmt_off + 24)

    if sample_rate <= 0:
        raise MalformedContainer(f"invalid sample rate {sample_rate}")
    if channels == 0:
        raise MalformedContainer("zero channels")
    if channels > 2:
        raise UnsupportedEncoding(f"{channels} channels; only mono/stereo supported")

    off, size = data_span
    if off + size > len(data):
        raise MalformedContainer("data chunk extends past end of file")
    payload = data[off:off + size]  # declared data length is authoritative

    if format_tag == 1:  # integer PCM
        if bits != 16:
            raise UnsupportedEncoding(f"{bits}-bit PCM; only 16-bit supported")
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif format_tag == 3:  # IEEE float
        if bits == 32:
            width, dtype = 4, "<f4"
        elif bits == 64:
            width, dtype = 8, "<f8"
        else:
            raise UnsupportedEncoding(f"{bits}-bit float; only 32/64-bit supported")
        raw = np.frombuffer(payload[: len(payload) - len(payload) % width], dtype=dtype)
        samples = raw.astype(np.float64)
        if samples.size and not np.isfinite(samples).all():
            raise MalformedContainer("non-finite float samples")
    else:
        raise UnsupportedEncoding(f"format tag {format_tag}; only PCM16/float supported")

    if channels == 2:
        samples = samples[: len(samples) - len(samples) % 2].reshape(-1, 2).mean(axis=1)

    buf = AudioBuffer(samples, sample_rate)
    if sample_rate != CANONICAL_RATE:
        buf = resample(buf, CANONICAL_RATE)
    return AudioBuffer(np.clip(buf.samples, -1.0, 1.0), CANONICAL_RATE)


def _kaiser(x: np.ndarray) -> np.ndarray:
    """Continuous Kaiser window on [-_HALF, _HALF], zero outside."""
    inside = np.abs(x) <= _HALF
    arg = np.zeros_like(x)
    arg[inside] = 1.0 - (x[inside] / _HALF) ** 2
    return np.where(inside, np.i0(_KAISER_BETA * np.sqrt(arg)) / np.i0(_KAISER_BETA), 0.0)


def resample(buf: AudioBuffer, target: int) -> AudioBuffer:
    """Band-limited resampling via 64-tap Kaiser windowed sinc.

    A pure tone below half the lower of the two rates keeps its frequency
    within 0.1%. Identity conversion returns the input unchanged.

    The fractional tap offsets repeat with period target/gcd(source, target),
    so the kernel is precomputed per phase (polyphase table) whenever that
    period is reasonable, which covers every common rate pair.
    """
    if target <= 0:
        raise ValueError(f"target rate must be > 0, got {target}")
    source = buf.sample_rate
    if target == source:
        return buf

    x = buf.samples
    n_out = int(round(len(x) * target / source))
    if n_out == 0 or len(x) == 0:
        return AudioBuffer(np.zeros(0), target)

    g = np.gcd(source, target)
    up, down = target // g, source // g
    cutoff = min(1.0, target / source)  # fraction of the source Nyquist kept
    padded = np.concatenate([np.zeros(_HALF), x, np.zeros(_HALF)])
    rel = np.arange(-_HALF + 1, _HALF + 1, dtype=np.float64)  # tap offsets around floor(t)

    def kernel_for(frac: np.ndarray) -> np.ndarray:
        offsets = rel[None, :] - frac[:, None]  # tap position minus exact center
        return cutoff * np.sinc(cutoff * offsets) * _kaiser(offsets)

    table = kernel_for(np.arange(up) / up) if up <= 8192 else None

    out = np.empty(n_out)
    for start in range(0, n_out, _CHUNK):
        m = np.arange(start, min(start + _CHUNK, n_out), dtype=np.int64)
        num = m * down  # output position in input samples is num/up
        base = num // up
        phase = num - base * up
        kernel = table[phase] if table is not None else kernel_for(phase / up)
        idx = base[:, None] + rel[None, :].astype(np.int64) + _HALF
        np.clip(idx, 0, len(padded) - 1, out=idx)
        out[start:start + len(m)] = np.einsum("ij,ij->i", padded[idx], kernel)

    return AudioBuffer(out, target)
