"""Short-time analysis and log-Mel filterbank front-end.

Frames of 25 ms with a 10 ms hop are turned into log-Mel band energies;
classifier inputs are patches of 150 consecutive frames (1515 ms of
signal). Band count is 24 for the convolutional models and 64 for the
embedding-style front-end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .errors import InsufficientFrames, SignalTooShort

FRAME_LEN_S = 0.025
FRAME_HOP_S = 0.010
PATCH_FRAMES = 150          # 149 hops + one window = 1515 ms of signal
DEFAULT_PATCH_HOP = 75      # 50% overlap between consecutive patches
LOG_FLOOR_ENERGY = 1e-10    # band energies are floored here before log
MEL_FMIN_HZ = 0.0


@dataclass(frozen=True)
class MelFrames:
    """F x N matrix of log-Mel energies with its framing metadata.

    ``frame_times`` holds the start time of each frame in the original
    recording; after non-speech frames are dropped these times are no
    longer uniformly spaced.
    """

    values: np.ndarray
    frame_hop: float = FRAME_HOP_S
    frame_len: float = FRAME_LEN_S
    frame_times: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("MelFrames.values must be 2-D (frames x bands)")
        if values.size and not np.isfinite(values).all():
            raise ValueError("MelFrames.values contain non-finite entries")
        object.__setattr__(self, "values", values)
        times = self.frame_times
        if times is None:
            times = np.arange(len(values)) * self.frame_hop
        times = np.asarray(times, dtype=np.float64)
        if len(times) != len(values):
            raise ValueError("frame_times length must match frame count")
        object.__setattr__(self, "frame_times", times)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bands(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MelPatch:
    """Fixed-size classifier input: PATCH_FRAMES x N log-Mel values."""

    values: np.ndarray
    t_start: float

    def __post_init__(self):
        if self.values.shape[0] != PATCH_FRAMES:
            raise ValueError(f"patch must have {PATCH_FRAMES} frames, got {self.values.shape[0]}")


def frame_signal(buf: AudioBuffer, frame_len: float = FRAME_LEN_S, hop: float = FRAME_HOP_S) -> np.ndarray:
    """Slice a buffer into overlapping frames (rows), dropping the tail.

    Frame count is floor((n_samples - frame_samples)/hop_samples) + 1.

    Raises:
        SignalTooShort: fewer samples than one full frame.
    """
    if frame_len < hop:
        raise ValueError("frame_len must be >= hop")
    frame_samples = int(round(frame_len * buf.sample_rate))
    hop_samples = int(round(hop * buf.sample_rate))
    x = buf.samples
    if len(x) < frame_samples:
        raise SignalTooShort(f"{len(x)} samples < one {frame_samples}-sample frame")
    n_frames = (len(x) - frame_samples) // hop_samples + 1
    stride = x.strides[0]
    return np.lib.stride_tricks.as_strided(
        x, shape=(n_frames, frame_samples), strides=(hop_samples * stride, stride)
    )


def hz_to_mel(f):
    """HTK Mel scale: 2595 * log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_matrix(n_bands: int, n_fft: int, sr: int, fmin: float = MEL_FMIN_HZ, fmax: float | None = None) -> np.ndarray:
    """Triangular Mel filters (n_bands x n_fft//2+1), peak response 1.

    Each FFT bin lies under at most two adjacent triangles.
    """
    if n_bands < 2:
        raise ValueError("need at least 2 Mel bands")
    if fmax is None:
        fmax = sr / 2.0
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_bands + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * (sr / n_fft)
    matrix = np.zeros((n_bands, len(bin_freqs)))
    for k in range(n_bands):
        lo, center, hi = edges_hz[k], edges_hz[k + 1], edges_hz[k + 2]
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        matrix[k] = np.clip(np.minimum(rising, falling), 0.0, 1.0)
    return matrix


def band_center_frequencies(n_bands: int, sr: int = 16000, fmin: float = MEL_FMIN_HZ, fmax: float | None = None) -> np.ndarray:
    """Center frequency (Hz) of each triangular band."""
    if fmax is None:
        fmax = sr / 2.0
    return mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_bands + 2))[1:-1]


def mel_filterbank(frames: np.ndarray, n_bands: int, sr: int = 16000,
                   frame_hop: float = FRAME_HOP_S, frame_len: float = FRAME_LEN_S) -> MelFrames:
    """Log-Mel band energies per frame.

    Per frame: Hamming window, power spectrum, triangular Mel filters over
    0..sr/2, natural log with an energy floor so silence maps to a finite
    constant.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n_fft = 1 << (frames.shape[1] - 1).bit_length()
    window = np.hamming(frames.shape[1])
    spectrum = np.fft.rfft(frames * window, n=n_fft, axis=1)
    power = spectrum.real ** 2 + spectrum.imag ** 2
    energies = power @ mel_filter_matrix(n_bands, n_fft, sr).T
    values = np.log(np.maximum(energies, LOG_FLOOR_ENERGY))
    return MelFrames(values, frame_hop=frame_hop, frame_len=frame_len)


def melspectrogram(buf: AudioBuffer, n_bands: int) -> MelFrames:
    """Frame a buffer and compute its log-Mel features in one step."""
    return mel_filterbank(frame_signal(buf), n_bands, sr=buf.sample_rate)


def make_patches(mel: MelFrames, n_frames: int = PATCH_FRAMES, hop: int = DEFAULT_PATCH_HOP) -> list[MelPatch]:
    """Cut MelFrames into overlapping fixed-size patches.

    Patch count is floor((F - n_frames)/hop) + 1; patches are views into
    the underlying frame data.

    Raises:
        InsufficientFrames: fewer frames than one patch.
    """
    if hop < 1:
        raise ValueError("patch hop must be >= 1")
    total = mel.n_frames
    if total < n_frames:
        raise InsufficientFrames(f"{total} frames < patch size {n_frames}")
    count = (total - n_frames) // hop + 1
    return [
        MelPatch(mel.values[i * hop: i * hop + n_frames], t_start=float(mel.frame_times[i * hop]))
        for i in range(count)
    ]
