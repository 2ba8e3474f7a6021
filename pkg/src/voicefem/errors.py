"""Exception taxonomy for the voicefem package.

Every operation that can fail in a recoverable, caller-distinguishable way
raises one of these. All inherit from :class:`VoicefemError` so callers can
catch the whole family at API boundaries (CLI, HTTP service).
"""

from sklearn.exceptions import NotFittedError


class VoicefemError(Exception):
    """Base class for all voicefem errors."""


# --- audio decoding ---------------------------------------------------------

class MalformedContainer(VoicefemError):
    """Input bytes are not a parseable RIFF/WAVE container."""


class UnsupportedEncoding(VoicefemError):
    """Valid container, but a codec/layout we do not decode."""


# --- feature extraction -----------------------------------------------------

class SignalTooShort(VoicefemError):
    """Signal shorter than one analysis frame."""


class InsufficientFrames(VoicefemError):
    """Fewer frames than one classifier patch."""


# --- classical acoustics ----------------------------------------------------

class NoVoicedFrames(VoicefemError):
    """No (or too few) voiced frames for a pitch-based measurement."""


class FormantTrackingFailed(VoicefemError):
    """Formant candidates too unstable to report medians."""


# --- classifier models ------------------------------------------------------

class ShapeUnderflow(VoicefemError):
    """Convolution/pooling stack exhausts a spatial dimension."""


class DimensionMismatch(VoicefemError):
    """Input dimensions incompatible with the model."""


class BadDimension(VoicefemError):
    """Embedding row does not have the expected dimension."""


class DuplicateId(VoicefemError):
    """Repeated recording id in an embedding table."""


class VersionMismatch(VoicefemError):
    """Model bundle or calibration file with an unknown version tag."""


class CorruptWeights(VoicefemError):
    """Model bundle payload truncated or inconsistent with its header."""


# --- training protocol ------------------------------------------------------

class EmptyGender(VoicefemError):
    """An operation requiring both genders saw only one."""


class TooFewSpeakers(VoicefemError):
    """Not enough speakers per gender for a train/dev split."""


class SpeakerTooShort(VoicefemError):
    """Speaker has less usable speech than one training excerpt."""


class NonFiniteLoss(VoicefemError):
    """Training loss became NaN/inf (all seeds aborted)."""


# --- calibration ------------------------------------------------------------

class NonPositiveWeight(VoicefemError):
    """Isotonic regression weight <= 0."""


class TooFewPairs(VoicefemError):
    """Not enough (score, target) pairs to fit a calibration map."""


class UnfittedMap(VoicefemError, NotFittedError):
    """Prediction requested from an unfitted calibration map.

    Also a :class:`sklearn.exceptions.NotFittedError` so sklearn-style
    tooling recognizes the state.
    """


# --- end-to-end pipeline ----------------------------------------------------

class InsufficientSpeech(VoicefemError):
    """Recording contains less detected speech than one analysis patch."""


class SingleClass(VoicefemError):
    """SVM training data contains a single class."""


# --- perceptual data --------------------------------------------------------

class NoAnswers(VoicefemError):
    """No listener answers for a speaker."""


class UnknownSpeaker(VoicefemError):
    """Answer references a speaker missing from the metadata table."""


class DegenerateDesign(VoicefemError):
    """Polynomial fit with a rank-deficient design (too few distinct x)."""


class EmptyGroup(VoicefemError):
    """Rank-sum test with an empty group."""


# --- evaluation metrics -----------------------------------------------------

class BothZero(VoicefemError):
    """Harmonic accuracy undefined: both per-gender accuracies are zero."""


class ZeroVariance(VoicefemError):
    """R^2 undefined: targets have no variance."""


class MissingMetadata(VoicefemError):
    """Evaluation record without gender or age band."""
