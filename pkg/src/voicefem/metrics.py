"""Evaluation metrics: harmonic accuracy, gender bias, R^2, age breakdowns.

Harmonic accuracy (the harmonic mean of per-gender accuracies) punishes
imbalance that a plain average would hide; gender bias is the signed
male-minus-female accuracy gap. Femininity prediction quality is the
coefficient of determination against perceptual targets, reported
separately for cisgender and transgender speakers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BothZero, MissingMetadata, ZeroVariance

AGE_BANDS = ("20-35", "36-50", "51-65", "over-65")
_BAND_ALIASES = {
    "20-35": "20-35", "36-50": "36-50", "51-65": "51-65",
    "over-65": "over-65", "over 65": "over-65", "65+": "over-65", ">65": "over-65",
}


def canonical_age_band(band: str) -> str:
    key = str(band).strip().lower()
    if key not in _BAND_ALIASES:
        raise ValueError(f"unknown age band {band!r}; expected one of {AGE_BANDS}")
    return _BAND_ALIASES[key]


def age_to_band(age: float) -> str:
    """Inclusive-lower/exclusive-upper bands; over-65 means age > 65."""
    if age > 65:
        return "over-65"
    if age >= 51:
        return "51-65"
    if age >= 36:
        return "36-50"
    return "20-35"


def hacc(acc_m: float, acc_f: float) -> float:
    """Harmonic mean of the two per-gender accuracies (percent).

    Raises:
        BothZero: both accuracies are zero.
    """
    for v in (acc_m, acc_f):
        if not 0.0 <= v <= 100.0:
            raise ValueError(f"accuracy must be in [0, 100], got {v}")
    if acc_m == 0.0 and acc_f == 0.0:
        raise BothZero("harmonic accuracy undefined for 0/0")
    if acc_m == 0.0 or acc_f == 0.0:
        return 0.0
    return 2.0 * acc_m * acc_f / (acc_m + acc_f)


def gender_bias(acc_m: float, acc_f: float) -> float:
    """Male minus female accuracy, percentage points (positive: male higher)."""
    return acc_m - acc_f


def r2(targets, predictions) -> float:
    """Coefficient of determination 1 - SS_res/SS_tot.

    Raises:
        ZeroVariance: targets all equal.
    """
    y = np.asarray(targets, dtype=np.float64)
    yhat = np.asarray(predictions, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1 or len(y) < 2:
        raise ValueError("need equal-length 1-D arrays with >= 2 entries")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ZeroVariance("targets have no variance")
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class BgcPrediction:
    """One scored recording for the binary gender classification task."""

    speaker_id: str
    gender: str          # true gender: F / M
    age_band: str
    p_female: float


@dataclass(frozen=True)
class EvalCell:
    n_f: int
    n_m: int
    acc_f: float | None
    acc_m: float | None
    hacc: float | None   # None when a gender is absent (degenerate cell)
    gb: float | None


@dataclass
class EvalReport:
    overall: EvalCell
    by_age: dict[str, EvalCell] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def cell(c: EvalCell) -> dict:
            return {"n_f": c.n_f, "n_m": c.n_m, "acc_f": c.acc_f, "acc_m": c.acc_m,
                    "hacc": c.hacc, "gb": c.gb}
        return {"overall": cell(self.overall),
                "by_age": {band: cell(c) for band, c in self.by_age.items()}}


def _cell(records: list[BgcPrediction]) -> EvalCell:
    f = [r for r in records if r.gender == "F"]
    m = [r for r in records if r.gender == "M"]
    acc_f = 100.0 * np.mean([r.p_female >= 0.5 for r in f]) if f else None
    acc_m = 100.0 * np.mean([r.p_female < 0.5 for r in m]) if m else None
    if acc_f is None or acc_m is None:
        return EvalCell(len(f), len(m), acc_f, acc_m, None, None)
    try:
        h = hacc(acc_m, acc_f)
    except BothZero:
        h = 0.0
    return EvalCell(len(f), len(m), float(acc_f), float(acc_m), h, gender_bias(acc_m, acc_f))


def evaluate_bgc(predictions) -> EvalReport:
    """Accuracy report over scored recordings, overall and per age band.

    Classification rule: p_female >= 0.5 predicts female. Bands with one
    gender only get hacc/gb = None.

    Raises:
        MissingMetadata: a record without gender or age band.
    """
    records = []
    for p in predictions:
        if not p.gender or not p.age_band:
            raise MissingMetadata(f"record {p.speaker_id!r} lacks gender or age band")
        records.append(BgcPrediction(p.speaker_id, p.gender, canonical_age_band(p.age_band),
                                     p.p_female))
    if not records:
        raise ValueError("no predictions to evaluate")
    report = EvalReport(overall=_cell(records))
    for band in AGE_BANDS:
        group = [r for r in records if r.age_band == band]
        if group:
            report.by_age[band] = _cell(group)
    return report


def evaluate_vfp(predicted: dict, categories: dict, targets: dict) -> tuple[float, float]:
    """R^2 of predicted vs perceptual femininity, split cis/trans.

    All dicts are keyed by speaker id; ``categories`` values are CF/CM/TF.
    Returns (r2 over CF+CM, r2 over TF).

    Raises:
        MissingMetadata: a predicted speaker without category or target.
        ZeroVariance: a subset's targets are constant.
    """
    cis_t, cis_p, tf_t, tf_p = [], [], [], []
    for spk, pred in predicted.items():
        if spk not in categories or spk not in targets:
            raise MissingMetadata(f"speaker {spk!r} lacks category or perceptual target")
        if categories[spk] == "TF":
            tf_t.append(targets[spk])
            tf_p.append(pred)
        else:
            cis_t.append(targets[spk])
            cis_p.append(pred)
    return r2(cis_t, cis_p), r2(tf_t, tf_p)
