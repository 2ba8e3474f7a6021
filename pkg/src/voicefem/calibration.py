"""Isotonic calibration from raw averaged scores to perceived femininity.

The raw recording score (mean of window-level female probabilities) is
mapped to a 0-100 femininity percentage by isotonic regression: a
least-squares monotone fit computed with the pool-adjacent-violators
algorithm (PAVA), linearly interpolated between knots and clamped outside
them.

:class:`IsotonicCalibrator` wraps the same fit behind the sklearn
estimator protocol so it drops into pipelines and model-selection tooling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .errors import NonPositiveWeight, TooFewPairs, UnfittedMap, VersionMismatch

CALIBRATION_FILE_VERSION = 1


def pava(y, w=None) -> np.ndarray:
    """Weighted least-squares non-decreasing fit of a sequence.

    Pool-adjacent-violators: scan left to right; whenever a block mean
    drops below its predecessor's, merge the blocks (weighted mean) and
    keep merging backwards while violations remain. Minimizes
    sum(w_i (f_i - y_i)^2) over non-decreasing f and preserves the
    weighted mean. Idempotent.

    Raises:
        NonPositiveWeight: any weight <= 0.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or len(y) == 0:
        raise ValueError("y must be a non-empty 1-D sequence")
    if w is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(w, dtype=np.float64)
        if w.shape != y.shape:
            raise ValueError("weights must match y in length")
        if np.any(w <= 0):
            raise NonPositiveWeight("all weights must be > 0")

    # Stack of blocks: (mean, weight, count).
    means = np.empty(len(y))
    weights = np.empty(len(y))
    counts = np.empty(len(y), dtype=np.int64)
    top = -1
    for val, wt in zip(y, w):
        top += 1
        means[top], weights[top], counts[top] = val, wt, 1
        while top > 0 and means[top - 1] > means[top]:
            total = weights[top - 1] + weights[top]
            means[top - 1] = (means[top - 1] * weights[top - 1] + means[top] * weights[top]) / total
            weights[top - 1] = total
            counts[top - 1] += counts[top]
            top -= 1
    return np.repeat(means[: top + 1], counts[: top + 1])


@dataclass(frozen=True)
class CalibrationMap:
    """Monotone knot sequence: strictly increasing x, non-decreasing y."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
            raise ValueError("a fitted map needs >= 2 matched knots")
        if np.any(np.diff(x) <= 0):
            raise ValueError("knot x values must be strictly increasing")
        if np.any(np.diff(y) < 0):
            raise ValueError("knot y values must be non-decreasing")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def to_json(self) -> str:
        return json.dumps({"version": CALIBRATION_FILE_VERSION,
                           "knots": [[float(a), float(b)] for a, b in zip(self.x, self.y)]})

    @classmethod
    def from_json(cls, text: str) -> "CalibrationMap":
        doc = json.loads(text)
        if doc.get("version") != CALIBRATION_FILE_VERSION:
            raise VersionMismatch(f"calibration file version {doc.get('version')!r}")
        knots = np.asarray(doc["knots"], dtype=np.float64)
        return cls(knots[:, 0], knots[:, 1])


def fit_isotonic(pairs) -> CalibrationMap:
    """Fit a calibration map from (raw_score, target) pairs.

    Pairs are sorted by score; ties on the score axis are merged to their
    mean target (with summed weight) before PAVA. Runs of equal fitted
    values are thinned to their endpoints, which leaves the interpolant
    unchanged.

    Raises:
        TooFewPairs: fewer than 2 pairs, or fewer than 2 distinct scores.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise TooFewPairs(f"{len(pairs)} pair(s); need >= 2")
    arr = np.asarray(pairs, dtype=np.float64)
    order = np.argsort(arr[:, 0], kind="stable")
    xs, ys = arr[order, 0], arr[order, 1]

    ux, start = np.unique(xs, return_index=True)
    if len(ux) < 2:
        raise TooFewPairs("need >= 2 distinct raw scores")
    bounds = np.append(start, len(xs))
    merged_y = np.array([ys[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])])
    weights = np.diff(bounds).astype(np.float64)

    fitted = pava(merged_y, weights)

    # Keep only endpoints of equal-value runs.
    keep = np.ones(len(ux), dtype=bool)
    if len(ux) > 2:
        interior_same = (fitted[1:-1] == fitted[:-2]) & (fitted[1:-1] == fitted[2:])
        keep[1:-1] = ~interior_same
    return CalibrationMap(ux[keep], fitted[keep])


def predict_vfp(cal: CalibrationMap | None, raw):
    """Calibrated femininity percentage for raw score(s) in [0, 1].

    Linear interpolation between knots; clamped to the first/last knot
    value outside their range.

    Raises:
        UnfittedMap: ``cal`` is None.
    """
    if cal is None:
        raise UnfittedMap("calibration map not fitted/loaded")
    out = np.interp(raw, cal.x, cal.y)
    return float(out) if np.isscalar(raw) else out


class IsotonicCalibrator(BaseEstimator, RegressorMixin):
    """sklearn-style wrapper around the isotonic calibration fit.

    fit(X, y) takes raw scores (1-D or single-column 2-D) and targets on
    the output scale; predict(X) returns calibrated values.
    """

    def fit(self, X, y):
        X = _as_scores(X)
        y = np.asarray(y, dtype=np.float64)
        if len(X) != len(y):
            raise ValueError("X and y must have equal length")
        self.map_ = fit_isotonic(zip(X, y))
        return self

    def predict(self, X):
        if not hasattr(self, "map_"):
            raise UnfittedMap("IsotonicCalibrator.predict before fit")
        return predict_vfp(self.map_, _as_scores(X))


def _as_scores(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    if X.ndim != 1:
        raise ValueError("scores must be 1-D or a single column")
    return X
