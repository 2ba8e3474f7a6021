"""Linear SVM on (median F0 in semitones, VTL in cm) features.

Trained by deterministic full-batch subgradient descent on the
L2-regularized hinge loss with a 1/(lambda*t) step schedule. With zero
initialization and batch means the run is exactly reproducible, flipping
all labels exactly negates the decision function, and duplicating the
dataset leaves the trajectory unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import SingleClass
from .nn import sigmoid

DEFAULT_LAMBDA = 0.01
DEFAULT_EPOCHS = 200


@dataclass(frozen=True)
class LinearSvmModel:
    """Fitted hyperplane plus the feature standardization that produced it."""

    weights: np.ndarray
    bias: float
    feat_mean: np.ndarray
    feat_std: np.ndarray

    def decision_value(self, x):
        """Signed distance-like score; positive means the +1 class (female)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        z = (x - self.feat_mean) / self.feat_std
        out = z @ self.weights + self.bias
        return float(out[0]) if out.shape == (1,) else out

    def probability(self, x):
        """Squashed decision value in (0, 1)."""
        return sigmoid(np.asarray(self.decision_value(x), dtype=np.float64))


def fit_linear_svm(features, labels, lam: float = DEFAULT_LAMBDA,
                   epochs: int = DEFAULT_EPOCHS) -> LinearSvmModel:
    """Fit the baseline SVM. Labels are 'F'/'M' (female is the +1 class).

    Raises:
        SingleClass: all labels identical.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be 2-D (n_samples, n_features)")
    y = np.array([1.0 if str(l).upper() in ("F", "1", "1.0") else -1.0 for l in labels])
    if len(np.unique(y)) < 2:
        raise SingleClass("need both classes to fit the SVM")
    if len(y) != len(x):
        raise ValueError("features and labels must have equal length")

    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), 1e-12)
    z = (x - mean) / std

    w = np.zeros(x.shape[1])
    b = 0.0
    for t in range(1, epochs + 1):
        margins = y * (z @ w + b)
        active = margins < 1.0
        grad_w = lam * w - (y[active, None] * z[active]).sum(axis=0) / len(y)
        grad_b = -y[active].sum() / len(y)
        lr = 1.0 / (lam * t)
        w -= lr * grad_w
        b -= lr * grad_b
    return LinearSvmModel(weights=w, bias=float(b), feat_mean=mean, feat_std=std)


class LinearSvm(BaseEstimator, ClassifierMixin):
    """sklearn-style estimator facade over :func:`fit_linear_svm`."""

    def __init__(self, lam: float = DEFAULT_LAMBDA, epochs: int = DEFAULT_EPOCHS):
        self.lam = lam
        self.epochs = epochs

    def fit(self, X, y):
        self.model_ = fit_linear_svm(X, y, lam=self.lam, epochs=self.epochs)
        return self

    def decision_function(self, X):
        return self.model_.decision_value(X)

    def predict(self, X):
        scores = np.atleast_1d(self.decision_function(X))
        return np.where(scores > 0, "F", "M")
