"""Energy-based voice activity detection.

Frames are scored by log energy and spectral flatness; the energy
threshold adapts to the recording (a percentile of frame energies plus a
margin in dB), so the decision is invariant to global gain. Short gaps are
bridged (hangover) and short blips dropped before segments are reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .errors import SignalTooShort
from .features import FRAME_HOP_S, FRAME_LEN_S, MelFrames, frame_signal


@dataclass(frozen=True)
class VadConfig:
    percentile: float = 30.0      # percentile of frame energies anchoring the threshold
    margin_db: float = 6.0        # dB above the anchor a frame must reach
    min_segment_ms: float = 200.0
    hangover_ms: float = 200.0    # gaps shorter than this are bridged
    flatness_max: float = 0.95    # frames flatter than this are never speech


@dataclass(frozen=True)
class SpeechSegment:
    t_start: float
    t_end: float

    def __post_init__(self):
        if not 0.0 <= self.t_start < self.t_end:
            raise ValueError(f"invalid segment [{self.t_start}, {self.t_end}]")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


def _frame_energy_db(frames: np.ndarray) -> np.ndarray:
    power = np.mean(frames ** 2, axis=1)
    return 10.0 * np.log10(np.maximum(power, 1e-12))


def _spectral_flatness(frames: np.ndarray) -> np.ndarray:
    spectrum = np.fft.rfft(frames * np.hamming(frames.shape[1]), axis=1)
    power = np.maximum(spectrum.real ** 2 + spectrum.imag ** 2, 1e-20)
    geometric = np.exp(np.mean(np.log(power), axis=1))
    return geometric / np.mean(power, axis=1)


def detect_speech(buf: AudioBuffer, cfg: VadConfig | None = None) -> list[SpeechSegment]:
    """Find speech segments, sorted and non-overlapping.

    An empty list is a valid result (e.g. digital silence). Frames must
    exceed the adaptive energy threshold and not look spectrally flat;
    gaps under ``hangover_ms`` are closed, segments under
    ``min_segment_ms`` dropped.
    """
    cfg = cfg or VadConfig()
    try:
        frames = frame_signal(buf)
    except SignalTooShort:
        return []

    energy_db = _frame_energy_db(frames)
    threshold = np.percentile(energy_db, cfg.percentile) + cfg.margin_db
    active = (energy_db > threshold) & (_spectral_flatness(frames) < cfg.flatness_max)
    if not active.any():
        return []

    hop, frame_len = FRAME_HOP_S, FRAME_LEN_S
    hangover_frames = int(round(cfg.hangover_ms / 1000.0 / hop))

    # Close gaps shorter than the hangover.
    runs = _runs(active)
    filled = active.copy()
    for i in range(len(runs) - 1):
        gap_start = runs[i][1]
        gap_end = runs[i + 1][0]
        if gap_end - gap_start < hangover_frames:
            filled[gap_start:gap_end] = True

    segments = []
    min_dur = cfg.min_segment_ms / 1000.0
    for start, end in _runs(filled):
        t0 = start * hop
        t1 = min((end - 1) * hop + frame_len, buf.duration)
        if t1 - t0 >= min_dur:
            segments.append(SpeechSegment(t0, t1))
    return segments


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, end) index ranges of True runs."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2], edges[1::2]))


def apply_segments(mel: MelFrames, segments: list[SpeechSegment]) -> MelFrames:
    """Keep only frames whose centers fall inside a speech segment.

    Order is preserved; the surviving frames keep their original start
    times so downstream patches report positions in the source recording.
    """
    if not segments:
        return MelFrames(
            mel.values[:0], frame_hop=mel.frame_hop, frame_len=mel.frame_len,
            frame_times=mel.frame_times[:0],
        )
    centers = mel.frame_times + mel.frame_len / 2.0
    keep = np.zeros(mel.n_frames, dtype=bool)
    for seg in segments:
        keep |= (centers >= seg.t_start) & (centers < seg.t_end)
    return MelFrames(
        mel.values[keep], frame_hop=mel.frame_hop, frame_len=mel.frame_len,
        frame_times=mel.frame_times[keep],
    )


def extract_speech_audio(buf: AudioBuffer, segments: list[SpeechSegment]) -> AudioBuffer:
    """Concatenate the sample ranges covered by the segments."""
    if not segments:
        return AudioBuffer(np.zeros(0), buf.sample_rate)
    parts = []
    for seg in segments:
        a = int(round(seg.t_start * buf.sample_rate))
        b = int(round(seg.t_end * buf.sample_rate))
        parts.append(buf.samples[a:b])
    return AudioBuffer(np.concatenate(parts), buf.sample_rate)
