"""Ensemble metrics: weighted moments, effective sample size, logistic test accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEnsembleError, DimensionMismatchError


@dataclass
class MomentSummary:
    mean: np.ndarray
    covariance: np.ndarray
    trace_over_d: float


def moments(ens) -> MomentSummary:
    """Weighted mean and population covariance (weights sum to one, no Bessel correction)."""
    X = ens.positions
    w = ens.weights
    if X.shape[0] < 2:
        raise DegenerateEnsembleError("moments need at least two particles")
    mean = w @ X
    centred = X - mean[None, :]
    cov = (centred * w[:, None]).T @ centred
    cov = 0.5 * (cov + cov.T)
    return MomentSummary(mean=mean, covariance=cov,
                         trace_over_d=float(np.trace(cov)) / X.shape[1])


def ess(weights: np.ndarray) -> float:
    """Effective sample size 1 / sum w_i^2 of normalised weights."""
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))


def test_accuracy(ens, features_test: np.ndarray, labels_test: np.ndarray) -> float:
    """Posterior-predictive test accuracy of a logistic-regression ensemble.

    The predictive probability of class +1 averages the per-particle sigmoids;
    a tie at 0.5 predicts +1.
    """
    Z = np.asarray(features_test, dtype=float)
    y = np.asarray(labels_test, dtype=float)
    if Z.shape[0] == 0:
        raise DegenerateEnsembleError("empty test set")
    if Z.shape[1] != ens.positions.shape[1] or y.shape != (Z.shape[0],):
        raise DimensionMismatchError(
            f"test set {Z.shape}/{y.shape} incompatible with ensemble dim {ens.positions.shape[1]}")
    logits = Z @ ens.positions.T
    probs = np.exp(-np.logaddexp(0.0, -logits))          # sigmoid, stable
    predictive = probs @ ens.weights
    predicted = np.where(predictive >= 0.5, 1.0, -1.0)
    return float((predicted == y).mean())
