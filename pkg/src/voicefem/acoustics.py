"""Classical acoustic measurements: pitch, formants, vocal tract length.

The pitch tracker is a YIN-style estimator: per 40 ms window, the
cumulative-mean-normalized difference function (CMNDF) is searched for the
first qualifying trough, refined by parabolic interpolation. It is
amplitude-invariant by construction.

Formants come from Burg LPC (order 12) on 11 kHz speech: polynomial roots
give (frequency, bandwidth) candidates; per-frame the first four plausible
resonances are kept and summarized by their medians over voiced frames.

Vocal tract length uses the uniform closed-open tube: each formant k sits
at (2k-1)c/(4L), so L is averaged over the first four formants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer, resample
from .errors import FormantTrackingFailed, NoVoicedFrames

F0_MIN_HZ = 50.0
F0_MAX_HZ = 600.0
F0_WINDOW_S = 0.040
F0_HOP_S = 0.010
CMNDF_THRESHOLD = 0.15

FORMANT_RATE = 11000
FORMANT_MAX_HZ = 5500.0
FORMANT_MIN_HZ = 90.0
FORMANT_MAX_BW_HZ = 400.0
LPC_ORDER = 12
PREEMPHASIS_FROM_HZ = 50.0


def semitones_from_hz(f):
    """Semitones relative to 1 Hz: 12*log2(f)."""
    return 12.0 * np.log2(f)


def hz_from_semitones(st):
    return np.exp2(np.asarray(st, dtype=np.float64) / 12.0)


@dataclass(frozen=True)
class PitchTrack:
    """Per-frame F0 in Hz (NaN where unvoiced)."""

    f0: np.ndarray
    frame_hop: float = F0_HOP_S

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=np.float64)
        f0.setflags(write=False)
        object.__setattr__(self, "f0", f0)

    @property
    def voiced(self) -> np.ndarray:
        return ~np.isnan(self.f0)

    @property
    def n_voiced(self) -> int:
        return int(self.voiced.sum())

    def voiced_f0(self) -> np.ndarray:
        return self.f0[self.voiced]


@dataclass(frozen=True)
class FormantEstimate:
    """Median first-four formants plus the raw per-frame candidates."""

    f1: float
    f2: float
    f3: float
    f4: float
    per_frame: list = field(repr=False, default_factory=list)
    n_frames: int = 0

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3, self.f4])


@dataclass(frozen=True)
class VtlConfig:
    speed_of_sound: float = 350.0  # m/s, in-tract value

    def __post_init__(self):
        if self.speed_of_sound <= 0:
            raise ValueError("speed_of_sound must be > 0")


def estimate_f0_track(buf: AudioBuffer, threshold: float = CMNDF_THRESHOLD) -> PitchTrack:
    """YIN-style F0 track at a 10 ms hop.

    All frames unvoiced is a valid result. Voiced values are clipped to
    the [50, 600] Hz search range.
    """
    sr = buf.sample_rate
    window = int(round(F0_WINDOW_S * sr))
    hop = int(round(F0_HOP_S * sr))
    tau_min = max(2, int(np.ceil(sr / F0_MAX_HZ)))
    tau_max = int(sr / F0_MIN_HZ)
    frame_len = window + tau_max

    x = buf.samples
    if len(x) < frame_len:
        x = np.concatenate([x, np.zeros(frame_len - len(x))])
    n_frames = (len(x) - frame_len) // hop + 1
    stride = x.strides[0]
    frames = np.lib.stride_tricks.as_strided(
        x, shape=(n_frames, frame_len), strides=(hop * stride, stride)
    )

    cmndf = _cmndf(frames, window, tau_max)
    lag, value = _pick_trough(cmndf, tau_min, tau_max, threshold)

    f0 = sr / lag
    f0[value >= threshold] = np.nan
    np.clip(f0, F0_MIN_HZ, F0_MAX_HZ, out=f0)
    return PitchTrack(f0, frame_hop=F0_HOP_S)


def _cmndf(frames: np.ndarray, window: int, tau_max: int) -> np.ndarray:
    """Cumulative-mean-normalized difference function per frame row."""
    n_fft = 1 << (frames.shape[1] + window - 1).bit_length()
    spec_full = np.fft.rfft(frames, n=n_fft, axis=1)
    spec_head = np.fft.rfft(frames[:, :window], n=n_fft, axis=1)
    cross = np.fft.irfft(spec_full * np.conj(spec_head), n=n_fft, axis=1)[:, : tau_max + 1]

    sq = np.concatenate([np.zeros((len(frames), 1)), np.cumsum(frames ** 2, axis=1)], axis=1)
    tau = np.arange(tau_max + 1)
    energy = sq[:, tau + window] - sq[:, tau]  # sum of x^2 over [tau, tau+window)
    diff = energy[:, :1] + energy - 2.0 * cross
    diff[:, 0] = 0.0
    np.maximum(diff, 0.0, out=diff)  # guard tiny negatives from FFT rounding

    cum = np.cumsum(diff[:, 1:], axis=1)
    out = np.ones_like(diff)
    positive = cum > 0
    out[:, 1:][positive] = (diff[:, 1:] * tau[1:])[positive] / cum[positive]
    return out


def _pick_trough(cmndf: np.ndarray, tau_min: int, tau_max: int, threshold: float):
    """Shortest-lag trough nearly as deep as the global minimum.

    Accepting only troughs within a slack of the deepest one rejects
    harmonics (a shallow dip at half the period, e.g. when a resonance
    amplifies the second harmonic) while the shortest-lag preference still
    avoids period doubling. Refined by parabolic interpolation.
    """
    region = cmndf[:, tau_min: tau_max + 1]
    best = region.min(axis=1, keepdims=True)
    slack = np.maximum(0.5 * best, 0.05)

    interior = region[:, 1:-1]
    is_min = (interior <= region[:, :-2]) & (interior <= region[:, 2:])
    qualifying = is_min & (interior < threshold) & (interior <= best + slack)

    has_q = qualifying.any(axis=1)
    first_q = qualifying.argmax(axis=1) + 1  # offset into region
    global_min = region.argmin(axis=1)
    pick = np.where(has_q, first_q, global_min) + tau_min

    rows = np.arange(len(cmndf))
    value = cmndf[rows, pick]

    # Parabolic interpolation over the trough's neighbors.
    safe = np.clip(pick, 1, cmndf.shape[1] - 2)
    left, mid, right = cmndf[rows, safe - 1], cmndf[rows, safe], cmndf[rows, safe + 1]
    denom = left - 2.0 * mid + right
    shift = np.where(np.abs(denom) > 1e-12, 0.5 * (left - right) / np.where(denom == 0, 1, denom), 0.0)
    lag = np.where(pick == safe, pick + np.clip(shift, -0.5, 0.5), pick.astype(np.float64))
    return lag, value


def median_f0_st(track: PitchTrack) -> float:
    """Median voiced F0 in semitones relative to 1 Hz.

    Raises:
        NoVoicedFrames: the track has no voiced frame.
    """
    voiced = track.voiced_f0()
    if voiced.size == 0:
        raise NoVoicedFrames("cannot take median F0 of an unvoiced track")
    return float(semitones_from_hz(np.median(voiced)))


def burg_coefficients(frames: np.ndarray, order: int) -> np.ndarray:
    """Burg-method AR coefficients for each frame row (batched).

    Returns an (n_frames, order+1) array with a[:, 0] == 1.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n_frames, n = frames.shape
    if n <= order:
        raise ValueError("frame shorter than LPC order")
    a = np.zeros((n_frames, order + 1))
    a[:, 0] = 1.0
    ef = frames.copy()
    eb = frames.copy()
    for m in range(order):
        fseg = ef[:, m + 1:]
        bseg = eb[:, m: n - 1]
        num = -2.0 * np.einsum("ij,ij->i", fseg, bseg)
        den = np.einsum("ij,ij->i", fseg, fseg) + np.einsum("ij,ij->i", bseg, bseg)
        k = np.where(den > 0, num / np.where(den == 0, 1.0, den), 0.0)
        new_f = fseg + k[:, None] * bseg
        eb[:, m + 1:] = bseg + k[:, None] * fseg
        ef[:, m + 1:] = new_f
        prev = a[:, : m + 2].copy()
        a[:, 1: m + 2] = prev[:, 1: m + 2] + k[:, None] * prev[:, : m + 1][:, ::-1]
    return a


def _resonances_from_lpc(a: np.ndarray, sr: int) -> list[np.ndarray]:
    """Sorted (freq, bw) candidates per frame from LPC polynomial roots."""
    n_frames, width = a.shape
    order = width - 1
    companion = np.zeros((n_frames, order, order))
    companion[:, 0, :] = -a[:, 1:]
    idx = np.arange(order - 1)
    companion[:, idx + 1, idx] = 1.0
    roots = np.linalg.eigvals(companion)

    out = []
    for r in roots:
        r = r[np.imag(r) > 1e-9]
        freq = np.angle(r) * sr / (2.0 * np.pi)
        modulus = np.clip(np.abs(r), 1e-12, None)
        bw = -(sr / np.pi) * np.log(modulus)
        keep = (freq >= FORMANT_MIN_HZ) & (freq <= FORMANT_MAX_HZ) & (bw < FORMANT_MAX_BW_HZ)
        cand = np.stack([freq[keep], bw[keep]], axis=1)
        out.append(cand[np.argsort(cand[:, 0])] if len(cand) else cand.reshape(0, 2))
    return out


def estimate_formants(buf: AudioBuffer, track: PitchTrack, max_frames: int = 600) -> FormantEstimate:
    """Median F1..F4 over voiced frames.

    The signal is moved to 11 kHz (resonance search below 5.5 kHz),
    pre-emphasized from 50 Hz, and analyzed with order-12 Burg LPC on the
    voiced frames of ``track``. At most ``max_frames`` frames are
    analyzed (evenly spaced) to bound runtime; medians are insensitive to
    this thinning.

    Raises:
        NoVoicedFrames: fewer than 10 voiced frames.
        FormantTrackingFailed: too few stable candidates, or medians not
            strictly increasing.
    """
    voiced_idx = np.flatnonzero(track.voiced)
    if len(voiced_idx) < 10:
        raise NoVoicedFrames(f"{len(voiced_idx)} voiced frames < 10")
    if len(voiced_idx) > max_frames:
        take = np.linspace(0, len(voiced_idx) - 1, max_frames).round().astype(int)
        voiced_idx = voiced_idx[take]

    low = resample(buf, FORMANT_RATE)
    alpha = np.exp(-2.0 * np.pi * PREEMPHASIS_FROM_HZ / FORMANT_RATE)
    emphasized = np.concatenate([low.samples[:1], low.samples[1:] - alpha * low.samples[:-1]])

    frame_len = int(round(0.025 * FORMANT_RATE))
    hop = track.frame_hop
    starts = (voiced_idx * hop * FORMANT_RATE).round().astype(int)
    starts = starts[starts + frame_len <= len(emphasized)]
    if len(starts) < 10:
        raise NoVoicedFrames("voiced frames fall outside the resampled signal")

    frames = emphasized[starts[:, None] + np.arange(frame_len)] * np.hamming(frame_len)
    candidates = _resonances_from_lpc(burg_coefficients(frames, LPC_ORDER), FORMANT_RATE)

    per_slot = [[] for _ in range(4)]
    for cand in candidates:
        for k in range(min(4, len(cand))):
            per_slot[k].append(cand[k, 0])
    if any(len(slot) < 3 for slot in per_slot):
        raise FormantTrackingFailed("fewer than 4 stable formant candidates")

    medians = [float(np.median(slot)) for slot in per_slot]
    if not all(medians[i] < medians[i + 1] for i in range(3)):
        raise FormantTrackingFailed(f"formant medians not increasing: {medians}")
    return FormantEstimate(*medians, per_frame=candidates, n_frames=len(frames))


def estimate_vtl(fmt: FormantEstimate, cfg: VtlConfig | None = None) -> float:
    """Vocal tract length in cm from the closed-open uniform tube model.

    Formant k of a tube of length L sits at (2k-1)c/(4L); invert each of
    F1..F4 and average.
    """
    cfg = cfg or VtlConfig()
    formants = fmt.as_array()
    k = np.arange(1, 5)
    lengths_m = (2 * k - 1) * cfg.speed_of_sound / (4.0 * formants)
    return float(np.mean(lengths_m) * 100.0)
