"""voicefem: voice femininity estimation toolkit.

Estimates a continuous 0-100 femininity percentage for a speech recording
by averaging sliding-window gender probabilities and calibrating the
average to human perceptual judgments, alongside classical F0/VTL
baselines, a bias-aware training protocol, perceptual-data analytics, and
fairness-aware evaluation metrics.
"""

from .audio import AudioBuffer, load_wav, resample
from .calibration import CalibrationMap, IsotonicCalibrator, fit_isotonic, pava, predict_vfp
from .classifier import (
    FeatureConfig,
    GenderScore,
    MlpSpec,
    ModelBundle,
    TpCnnSpec,
    build_model,
    forward,
    load_external_embeddings,
    load_model,
    pooled_stats_embedding,
    save_model,
)
from .acoustics import (
    FormantEstimate,
    PitchTrack,
    VtlConfig,
    estimate_f0_track,
    estimate_formants,
    estimate_vtl,
    median_f0_st,
    semitones_from_hz,
)
from .features import MelFrames, MelPatch, frame_signal, make_patches, mel_filterbank, melspectrogram
from .metrics import BgcPrediction, EvalReport, evaluate_bgc, evaluate_vfp, gender_bias, hacc, r2
from .perception import (
    AnswerRecord,
    SpeakerMeta,
    category_stats,
    fit_rt_parabola,
    vfp_from_answers,
    wilcoxon_rank_sum,
)
from .pipeline import (
    F0Baseline,
    F0VtlBaseline,
    PipelineConfig,
    VfpResult,
    VtlBaseline,
    estimate_vfp,
    estimate_vfp_baseline,
)
from .svm import LinearSvm, LinearSvmModel, fit_linear_svm
from .training import (
    CorpusIndex,
    EmbeddingProvider,
    MelStatsProvider,
    SpeakerRecord,
    TrainConfig,
    TrainResult,
    balance_by_gender,
    equalize_corpora,
    monitored_objective,
    sample_epoch,
    split_train_dev,
    train,
)
from .vad import SpeechSegment, VadConfig, apply_segments, detect_speech

__version__ = "0.1.0"
