"""End-to-end femininity estimation.

The main path chains voice activity detection, log-Mel features over the
detected speech, sliding 1515 ms window scoring with a trained model,
averaging of the window probabilities, and isotonic calibration of that
average. Classical F0/VTL baselines run through the same VAD-first
pipeline with their own raw-score definitions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .acoustics import (
    estimate_f0_track,
    estimate_formants,
    estimate_vtl,
    hz_from_semitones,
    median_f0_st,
    VtlConfig,
)
from .audio import AudioBuffer
from .calibration import CalibrationMap, predict_vfp
from .classifier import GenderScore, ModelBundle, forward, model_input_from_patch
from .errors import (
    FormantTrackingFailed,
    InsufficientSpeech,
    NoVoicedFrames,
    SignalTooShort,
    UnfittedMap,
)
from .features import DEFAULT_PATCH_HOP, PATCH_FRAMES, make_patches, melspectrogram
from .svm import LinearSvmModel
from .vad import VadConfig, apply_segments, detect_speech, extract_speech_audio

MIN_SPEECH_MS = 1515  # one full analysis patch


@dataclass(frozen=True)
class PipelineConfig:
    patch_hop: int = DEFAULT_PATCH_HOP
    vad: VadConfig = field(default_factory=VadConfig)
    vtl: VtlConfig = field(default_factory=VtlConfig)
    compute_diagnostics: bool = True


@dataclass
class VfpResult:
    """Everything one analysis produces."""

    vfp: float
    raw_score: float
    window_scores: list[GenderScore]
    speech_ratio: float
    f0_median_st: float | None = None
    f0_median_hz: float | None = None
    vtl_cm: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def n_windows(self) -> int:
        return len(self.window_scores)

    def to_dict(self, ndigits: int | None = None) -> dict:
        r = (lambda v: v) if ndigits is None else (
            lambda v: None if v is None else round(float(v), ndigits))
        return {
            "vfp": r(self.vfp),
            "raw_score": r(self.raw_score),
            "n_windows": self.n_windows,
            "window_scores": [
                {"t_start": r(s.t_start), "p_female": r(s.p_female)} for s in self.window_scores
            ],
            "speech_ratio": r(self.speech_ratio),
            "f0_median_st": r(self.f0_median_st),
            "f0_median_hz": r(self.f0_median_hz),
            "vtl_cm": r(self.vtl_cm),
            "warnings": list(self.warnings),
        }


def _speech_front_end(buf: AudioBuffer, n_bands: int, cfg: PipelineConfig):
    """VAD -> speech-only Mel frames (+ segments, speech ratio)."""
    segments = detect_speech(buf, cfg.vad)
    try:
        mel = melspectrogram(buf, n_bands)
    except SignalTooShort as exc:
        raise InsufficientSpeech(f"recording shorter than one frame: {exc}") from exc
    speech = apply_segments(mel, segments)
    ratio = speech.n_frames / mel.n_frames if mel.n_frames else 0.0
    return segments, speech, ratio


def _diagnostics(buf: AudioBuffer, segments, cfg: PipelineConfig):
    """Median F0 (ST and Hz) and VTL on speech-only audio; failures downgrade
    to warnings because the calibrated score does not depend on them."""
    st = hz = vtl = None
    warnings = []
    speech_audio = extract_speech_audio(buf, segments)
    track = estimate_f0_track(speech_audio) if len(speech_audio.samples) else None
    try:
        if track is None:
            raise NoVoicedFrames("no speech audio")
        st = median_f0_st(track)
        hz = float(hz_from_semitones(st))
    except NoVoicedFrames as exc:
        warnings.append(f"f0 unavailable: {exc}")
        return st, hz, vtl, warnings
    try:
        fmt = estimate_formants(speech_audio, track)
        vtl = estimate_vtl(fmt, cfg.vtl)
    except (NoVoicedFrames, FormantTrackingFailed) as exc:
        warnings.append(f"vtl unavailable: {exc}")
    return st, hz, vtl, warnings


def estimate_vfp(buf: AudioBuffer, bundle: ModelBundle, cal: CalibrationMap,
                 cfg: PipelineConfig | None = None) -> VfpResult:
    """Calibrated femininity percentage for one recording.

    Raises:
        InsufficientSpeech: less than 1515 ms of detected speech.
        DimensionMismatch: model incompatible with audio-derived features.
        UnfittedMap: no calibration map.
    """
    if cal is None:
        raise UnfittedMap("calibration map required")
    cfg = cfg or PipelineConfig()

    segments, speech, ratio = _speech_front_end(buf, bundle.feature_config.n_bands, cfg)
    if speech.n_frames < PATCH_FRAMES:
        ms = int(speech.n_frames * speech.frame_hop * 1000)
        raise InsufficientSpeech(f"{ms} ms of detected speech < {MIN_SPEECH_MS} ms")

    patches = make_patches(speech, hop=cfg.patch_hop)
    inputs = np.stack([model_input_from_patch(bundle, p) for p in patches])
    probs = np.atleast_1d(forward(bundle, inputs))
    scores = [GenderScore(float(p), patch.t_start) for p, patch in zip(probs, patches)]

    raw = float(probs.mean())
    result = VfpResult(
        vfp=float(predict_vfp(cal, raw)),
        raw_score=raw,
        window_scores=scores,
        speech_ratio=ratio,
    )
    if cfg.compute_diagnostics:
        result.f0_median_st, result.f0_median_hz, result.vtl_cm, warns = \
            _diagnostics(buf, segments, cfg)
        result.warnings.extend(warns)
    return result


# --- classical baselines ----------------------------------------------------

@dataclass(frozen=True)
class F0Baseline:
    """Median F0 (semitones) affinely rescaled to a [0, 1] raw score."""

    st_min: float
    st_max: float
    kind = "f0"

    def raw_score(self, st: float, vtl: float | None = None) -> float:
        return float(np.clip((st - self.st_min) / (self.st_max - self.st_min), 0.0, 1.0))


@dataclass(frozen=True)
class VtlBaseline:
    """Negated vocal tract length rescaled to [0, 1] (shorter tube -> higher)."""

    vtl_min: float
    vtl_max: float
    kind = "vtl"

    def raw_score(self, st: float, vtl: float) -> float:
        return float(np.clip((self.vtl_max - vtl) / (self.vtl_max - self.vtl_min), 0.0, 1.0))


@dataclass(frozen=True)
class F0VtlBaseline:
    """Sigmoid of the linear SVM decision value on (F0 ST, VTL cm)."""

    svm: LinearSvmModel
    kind = "f0vtl"

    def raw_score(self, st: float, vtl: float) -> float:
        return float(self.svm.probability([[st, vtl]]))


def fit_f0_baseline(st_values) -> F0Baseline:
    st = np.asarray(st_values, dtype=np.float64)
    if np.ptp(st) == 0:
        raise ValueError("need spread in the semitone values")
    return F0Baseline(st_min=float(st.min()), st_max=float(st.max()))


def fit_vtl_baseline(vtl_values) -> VtlBaseline:
    v = np.asarray(vtl_values, dtype=np.float64)
    if np.ptp(v) == 0:
        raise ValueError("need spread in the VTL values")
    return VtlBaseline(vtl_min=float(v.min()), vtl_max=float(v.max()))


def estimate_vfp_baseline(buf: AudioBuffer, baseline, cal: CalibrationMap,
                          cfg: PipelineConfig | None = None) -> VfpResult:
    """Run a classical baseline in the same VAD-first pipeline.

    Raises:
        NoVoicedFrames: the measurements the baseline needs are missing.
        UnfittedMap: no calibration map.
    """
    if cal is None:
        raise UnfittedMap("calibration map required")
    cfg = cfg or PipelineConfig()

    segments = detect_speech(buf, cfg.vad)
    speech_audio = extract_speech_audio(buf, segments)
    if not len(speech_audio.samples):
        raise NoVoicedFrames("no speech detected")
    track = estimate_f0_track(speech_audio)
    st = median_f0_st(track)

    vtl = None
    warnings = []
    if baseline.kind in ("vtl", "f0vtl"):
        vtl = estimate_vtl(estimate_formants(speech_audio, track), cfg.vtl)
    else:
        try:
            vtl = estimate_vtl(estimate_formants(speech_audio, track), cfg.vtl)
        except (NoVoicedFrames, FormantTrackingFailed) as exc:
            warnings.append(f"vtl unavailable: {exc}")

    raw = baseline.raw_score(st, vtl)
    clipped = float(np.clip(raw, 1e-9, 1.0 - 1e-9))
    ratio = (sum(s.duration for s in segments) / buf.duration) if buf.duration else 0.0
    return VfpResult(
        vfp=float(predict_vfp(cal, raw)),
        raw_score=raw,
        window_scores=[GenderScore(clipped, segments[0].t_start if segments else 0.0)],
        speech_ratio=min(ratio, 1.0),
        f0_median_st=st,
        f0_median_hz=float(hz_from_semitones(st)),
        vtl_cm=vtl,
        warnings=warnings,
    )
