"""Target-problem zoo: prior sampler, prior score, negative log-likelihood and gradient.

Each constructor returns a :class:`TargetProblem` whose callables accept either a
single point of shape (d,) or a batch of shape (n, d); ``h`` returns a scalar or
(n,) vector, the vector fields return arrays matching the input shape.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import DatasetFormatError, DimensionMismatchError

LOG_2PI = float(np.log(2.0 * np.pi))

# Evaluations of h at the log-Rosenbrock singularity return this finite sentinel
# and the gradient norm is capped, so trajectories survive a measure-zero set.
JOKER_H_SENTINEL = 1e12
JOKER_GRAD_CAP = 1e8


@dataclass
class ReferenceMoments:
    """Closed-form moments of the tempered curve, used as test oracles."""

    mean_at: Callable[[float], np.ndarray]
    cov_at: Callable[[float], np.ndarray]
    log_z1: float | None = None


@dataclass
class TargetProblem:
    dim: int
    prior_sample: Callable[[np.random.Generator, int], np.ndarray]
    prior_score: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    grad_h: Callable[[np.ndarray], np.ndarray]
    reference: ReferenceMoments | None = None
    name: str = ""


def _as_batch(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {X.shape[1]}")
    return X, single


def gaussian_conjugate(d: int) -> TargetProblem:
    """Gaussian prior N(1, I) with Gaussian observation model and posterior N(0, I/2).

    The negative log-likelihood is the full normalised Gaussian density at the
    all-minus-ones observation, h(x) = ||x + 1||^2 / 2 + (d/2) ln(2 pi); the
    constant drops out of the dynamics but makes the normalising-constant
    identity exact. The tempered curve has mean ((1-t)/(1+t)) 1 and covariance
    I/(1+t).
    """
    if d < 1:
        raise DimensionMismatchError(f"dimension must be >= 1, got {d}")
    ones = np.ones(d)

    def prior_sample(rng, count):
        return rng.standard_normal((count, d)) + 1.0

    def prior_score(x):
        X, single = _as_batch(x, d)
        out = 1.0 - X
        return out[0] if single else out

    def h(x):
        X, single = _as_batch(x, d)
        out = 0.5 * ((X + 1.0) ** 2).sum(axis=1) + 0.5 * d * LOG_2PI
        return float(out[0]) if single else out

    def grad_h(x):
        X, single = _as_batch(x, d)
        out = X + 1.0
        return out[0] if single else out

    reference = ReferenceMoments(
        mean_at=lambda t: ((1.0 - t) / (1.0 + t)) * ones,
        cov_at=lambda t: np.eye(d) / (1.0 + t),
        log_z1=d * (-1.0 - 0.5 * np.log(4.0 * np.pi)),
    )
    return TargetProblem(d, prior_sample, prior_score, h, grad_h, reference,
                         name=f"gaussian(d={d})")


def _rosenbrock_parts(X):
    a = (1.0 - X[:, 0]) ** 2 + 100.0 * (X[:, 1] - X[:, 0] ** 2) ** 2
    return a


def joker(noise_sigma: float = 0.3, x_true: np.ndarray | None = None,
          rng: np.random.Generator | None = None) -> TargetProblem:
    """2-d posterior from a noisy scalar observation of the log-Rosenbrock map.

    F(x) = log((1 - x1)^2 + 100 (x2 - x1^2)^2), a single observation
    y = F(x_true) + N(0, sigma^2) and a standard Gaussian prior give
    h(x) = (F(x) - y)^2 / (2 sigma^2). The map is singular at (1, 1); evaluations
    there return a large finite sentinel and a norm-capped gradient.
    """
    if noise_sigma <= 0.0:
        raise DimensionMismatchError(f"noise sigma must be positive, got {noise_sigma}")
    rng = rng if rng is not None else np.random.default_rng(0)
    if x_true is None:
        x_true = rng.standard_normal(2)
    x_true = np.asarray(x_true, dtype=float)
    if x_true.shape != (2,):
        raise DimensionMismatchError(f"x_true must have shape (2,), got {x_true.shape}")
    y_obs = float(np.log(_rosenbrock_parts(x_true[None, :])[0])
                  + noise_sigma * rng.standard_normal())
    inv_var = 1.0 / (noise_sigma * noise_sigma)

    def prior_sample(r, count):
        return r.standard_normal((count, 2))

    def prior_score(x):
        X, single = _as_batch(x, 2)
        return -X[0] if single else -X

    def h(x):
        X, single = _as_batch(x, 2)
        a = _rosenbrock_parts(X)
        ok = a >= 1e-300
        out = np.full(X.shape[0], JOKER_H_SENTINEL)
        out[ok] = 0.5 * inv_var * (np.log(a[ok]) - y_obs) ** 2
        return float(out[0]) if single else out

    def grad_h(x):
        X, single = _as_batch(x, 2)
        a = np.maximum(_rosenbrock_parts(X), 1e-300)
        gF1 = (-2.0 * (1.0 - X[:, 0]) - 400.0 * X[:, 0] * (X[:, 1] - X[:, 0] ** 2)) / a
        gF2 = 200.0 * (X[:, 1] - X[:, 0] ** 2) / a
        out = (inv_var * (np.log(a) - y_obs))[:, None] * np.stack([gF1, gF2], axis=1)
        norms = np.linalg.norm(out, axis=1)
        big = norms > JOKER_GRAD_CAP
        if np.any(big):
            out[big] *= (JOKER_GRAD_CAP / norms[big])[:, None]
        return out[0] if single else out

    return TargetProblem(2, prior_sample, prior_score, h, grad_h,
                         name=f"joker(sigma={noise_sigma})")


def rosenbrock_log(x) -> float | np.ndarray:
    """The Joker forward map F(x) = log((1 - x1)^2 + 100 (x2 - x1^2)^2)."""
    X, single = _as_batch(x, 2)
    out = np.log(np.maximum(_rosenbrock_parts(X), 1e-300))
    return float(out[0]) if single else out


def _pairwise_sq(X, Y):
    return ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2)


def mixture_means(d: int, literal_cos: bool = False) -> np.ndarray:
    """Four mixture means with first two coordinates on a circle of radius sqrt 5.

    Angles are 2 j pi / 4 + pi / 4 for j = 1..4. By default the coordinates are
    (cos, sin); ``literal_cos=True`` uses cos for both, matching a printed variant
    that does not place the means on a circle.
    """
    mus = np.zeros((4, d))
    for j in range(1, 5):
        theta = 2.0 * j * np.pi / 4.0 + np.pi / 4.0
        second = np.cos(theta) if literal_cos else np.sin(theta)
        mus[j - 1, :2] = np.sqrt(5.0) * np.array([np.cos(theta), second])
    return mus


def low_rank_mixture(d: int, literal_cos: bool = False) -> TargetProblem:
    """Equal mixture of four unit-covariance Gaussians, low-rank in the first two coords.

    Exposed through the homotopy as a standard Gaussian prior with
    h = -log(pi_target / pi_0), so the tempered curve lands exactly on the
    mixture at t = 1 and the interpolated score is the geometric blend
    (1 - t) prior score + t mixture score.
    """
    if d < 2:
        raise DimensionMismatchError(f"mixture needs dimension >= 2, got {d}")
    mus = mixture_means(d, literal_cos)

    def prior_sample(rng, count):
        return rng.standard_normal((count, d))

    def prior_score(x):
        X, single = _as_batch(x, d)
        return -X[0] if single else -X

    def _log_unnorm_and_resp(X):
        # exponents of the four components (up to the shared Gaussian constant)
        expo = -0.5 * _pairwise_sq(X, mus)
        lse = logsumexp(expo, axis=1)
        resp = np.exp(expo - lse[:, None])
        return lse, resp

    def h(x):
        X, single = _as_batch(x, d)
        lse, _ = _log_unnorm_and_resp(X)
        out = -0.5 * (X * X).sum(axis=1) - lse + np.log(4.0)
        return float(out[0]) if single else out

    def grad_h(x):
        X, single = _as_batch(x, d)
        _, resp = _log_unnorm_and_resp(X)
        mixture_score = resp @ mus - X
        out = -X - mixture_score
        return out[0] if single else out

    return TargetProblem(d, prior_sample, prior_score, h, grad_h,
                         name=f"low_rank_mixture(d={d})")


def mixture_density(x, d: int, literal_cos: bool = False) -> float | np.ndarray:
    """Density of the low-rank mixture target (normalised)."""
    X, single = _as_batch(x, d)
    mus = mixture_means(d, literal_cos)
    expo = -0.5 * _pairwise_sq(X, mus)
    out = np.exp(logsumexp(expo, axis=1)) / (4.0 * (2.0 * np.pi) ** (d / 2.0))
    return float(out[0]) if single else out


def logistic_regression(features: np.ndarray, labels: np.ndarray) -> TargetProblem:
    """Bayesian logistic regression with standard Gaussian prior.

    h(x) = sum_i log(1 + exp(-y_i <x, z_i>)) over the supplied rows, evaluated with
    a numerically stable log1p-exp; labels must be in {-1, +1}. Preprocessing
    (standardisation, bias column, train/test split) lives in :func:`load_dataset`.
    """
    Z = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if Z.ndim != 2 or y.shape != (Z.shape[0],):
        raise DimensionMismatchError(f"features {Z.shape} and labels {y.shape} incompatible")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DatasetFormatError("labels must be -1 or +1")
    if not np.all(np.isfinite(Z)):
        raise DatasetFormatError("features contain non-finite entries")
    p = Z.shape[1]

    def prior_sample(rng, count):
        return rng.standard_normal((count, p))

    def prior_score(x):
        X, single = _as_batch(x, p)
        return -X[0] if single else -X

    def h(x):
        X, single = _as_batch(x, p)
        margins = (X @ Z.T) * y[None, :]
        out = np.logaddexp(0.0, -margins).sum(axis=1)
        return float(out[0]) if single else out

    def grad_h(x):
        X, single = _as_batch(x, p)
        margins = (X @ Z.T) * y[None, :]
        # sigmoid(-margin) = 1 - sigmoid(margin), computed stably
        s = np.exp(-np.logaddexp(0.0, margins))
        out = -(s * y[None, :]) @ Z
        return out[0] if single else out

    return TargetProblem(p, prior_sample, prior_score, h, grad_h,
                         name=f"logistic(p={p}, n={Z.shape[0]})")


class LogisticData(NamedTuple):
    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray


def load_dataset(path, *, test_fraction: float = 0.2, seed: int = 0,
                 bias: bool = True, standardize: bool = True) -> LogisticData:
    """Read a label-first CSV and return a standardised, shuffled train/test split.

    First column holds the label (-1/+1, or 0/1 with 0 remapped to -1), remaining
    columns are numeric features; a header row is detected by a non-numeric first
    cell. Features are z-scored per column using training statistics; a bias
    column of ones is appended after scaling when ``bias`` is set.
    """
    path = Path(path)
    rows: list[list[float]] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            first = row[0].strip()
            if lineno == 1:
                try:
                    float(first)
                except ValueError:
                    continue  # header row
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise DatasetFormatError(f"non-numeric entry ({exc})", line=lineno) from exc
            if rows and len(values) != len(rows[0]):
                raise DatasetFormatError(
                    f"expected {len(rows[0])} columns, got {len(values)}", line=lineno)
            if len(values) < 2:
                raise DatasetFormatError("need a label and at least one feature", line=lineno)
            label = values[0]
            if label == 0.0:
                label = -1.0
            if label not in (-1.0, 1.0):
                raise DatasetFormatError(f"label {values[0]} outside {{-1, 0, +1}}", line=lineno)
            rows.append([label] + values[1:])
    if not rows:
        raise DatasetFormatError(f"no data rows in {path}")

    data = np.asarray(rows, dtype=float)
    labels, features = data[:, 0], data[:, 1:]
    n = data.shape[0]
    perm = np.random.default_rng(seed).permutation(n)
    n_test = int(round(n * test_fraction))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    Ztr, Zte = features[train_idx], features[test_idx]
    ytr, yte = labels[train_idx], labels[test_idx]

    if standardize:
        mu = Ztr.mean(axis=0)
        sd = Ztr.std(axis=0)
        sd[sd == 0.0] = 1.0
        Ztr = (Ztr - mu) / sd
        Zte = (Zte - mu) / sd
    if bias:
        Ztr = np.hstack([Ztr, np.ones((Ztr.shape[0], 1))])
        Zte = np.hstack([Zte, np.ones((Zte.shape[0], 1))])
    return LogisticData(Ztr, ytr, Zte, yte)


def synthetic_logistic(n: int, p: int, margin: float,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Linearly separable classification data with the stated margin.

    Gaussian features are projected onto a random unit direction; points inside
    the margin band are shifted along that direction until the signed distance
    is at least ``margin``.
    """
    w = rng.standard_normal(p)
    w /= np.linalg.norm(w)
    Z = rng.standard_normal((n, p))
    m = Z @ w
    y = np.where(m >= 0.0, 1.0, -1.0)
    short = np.abs(m) < margin
    Z[short] += (y[short] * margin - m[short])[:, None] * w[None, :]
    return Z, y
