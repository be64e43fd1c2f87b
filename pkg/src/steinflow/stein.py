"""Regression core: Stein-operator Gram assembly, Tikhonov solve, velocity field, KSD.

The driving vector field is the minimiser of a kernel ridge regression whose data
are particle evaluations of the (centred) negative log-likelihood; applying the
Stein operator of the current density to both arguments of a base kernel yields
the Gram matrix of that regression. Uniform weights give the plain 1/N empirical
formulation; general weights give the weighted variant, through the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from . import kernels
from .errors import DimensionMismatchError, NumericalError
from .kernels import KernelConfig, KernelFamily

#: A score field maps points (n, d) or (d,) to score vectors of the same shape.
ScoreField = Callable[[np.ndarray], np.ndarray]

_RESIDUAL_RTOL = 1e-8


@dataclass
class SolveOutput:
    """Coefficients of the ridge solve plus the achieved residual."""

    phi: np.ndarray
    residual_norm: float
    condition_hint: float | None = None


def stein_apply(score: ScoreField, v: Callable, div_v: Callable, x: np.ndarray) -> float:
    """Apply the Stein operator of the density behind ``score`` to the field v at x.

    Returns score(x) . v(x) + (div v)(x); computable without the normalising
    constant of the density.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(score(x), dtype=float)
    vx = np.asarray(v(x), dtype=float)
    if s.shape != x.shape or vx.shape != x.shape:
        raise DimensionMismatchError(
            f"score/field shapes {s.shape}, {vx.shape} do not match input {x.shape}"
        )
    return float(s @ vx + div_v(x))


def ksd_gram(
    positions: np.ndarray,
    scores: np.ndarray,
    kernel: KernelConfig,
    sigma2: float,
) -> np.ndarray:
    """Gram matrix of the Stein-operator kernel at the particles, symmetrised.

    Entry (i, j) is
    ``s_i . grad_y k(x_i, x_j) + s_j . grad_x k(x_i, x_j) + cross_div(x_i, x_j)
    + s_i . k(x_i, x_j) s_j``
    with s the per-particle score vectors. The output is symmetrised as
    (Xi + Xi^T)/2 to remove floating-point asymmetry.
    """
    X = np.atleast_2d(np.asarray(positions, dtype=float))
    S = np.atleast_2d(np.asarray(scores, dtype=float))
    if X.shape != S.shape:
        raise DimensionMismatchError(f"positions {X.shape} and scores {S.shape} differ")
    d = X.shape[1]
    r2 = kernels.sq_dists(X, X)
    g0 = kernels._g0(kernel, sigma2, r2)
    g1 = kernels._g1(kernel, sigma2, r2)
    g2 = kernels._g2(kernel, sigma2, r2)
    # s_i . grad_y k + s_j . grad_x k = -2 g1 (e_i + e_j - s_i.x_j - s_j.x_i)
    A = S @ X.T
    e = np.einsum("ij,ij->i", S, X)
    grad_terms = -2.0 * g1 * (e[:, None] + e[None, :] - A - A.T)
    div_term = -2.0 * d * g1 - 4.0 * r2 * g2
    score_term = (S @ S.T) * g0
    xi = grad_terms + div_term + score_term
    return 0.5 * (xi + xi.T)


def solve_phi(
    gram: np.ndarray,
    h_values: np.ndarray,
    weights: np.ndarray,
    lam: float,
) -> SolveOutput:
    """Solve (Xi diag(w) + lam I) phi = h0 with h0 the weight-centred h values.

    Uniform weights reduce the system to (Xi / N + lam I) phi = h0 exactly and are
    solved by Cholesky on the symmetric positive-definite matrix; non-uniform
    weights break symmetry and are solved by LU with partial pivoting. A failed
    Cholesky falls back to LU and records a condition estimate.
    """
    gram = np.asarray(gram, dtype=float)
    h_values = np.asarray(h_values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = h_values.shape[0]
    if gram.shape != (n, n):
        raise DimensionMismatchError(f"gram {gram.shape} incompatible with h values ({n},)")
    if weights.shape != (n,):
        raise DimensionMismatchError(f"weights {weights.shape} incompatible with h values ({n},)")
    if not np.isfinite(lam) or lam <= 0.0:
        raise NumericalError(f"regularisation must be positive, got {lam}")
    if not np.all(np.isfinite(gram)) or not np.all(np.isfinite(h_values)):
        raise NumericalError("non-finite entries in gram or h values")
    if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > 1e-9:
        raise NumericalError("weights must be nonnegative and sum to one")

    h0 = h_values - float(weights @ h_values)
    system = gram * weights[None, :] + lam * np.eye(n)

    condition_hint = None
    uniform = bool(np.all(weights == weights[0]))
    phi = None
    if uniform:
        try:
            cho = scipy.linalg.cho_factor(system, lower=True, check_finite=False)
            phi = scipy.linalg.cho_solve(cho, h0, check_finite=False)
        except scipy.linalg.LinAlgError:
            condition_hint = float(np.linalg.cond(system))
    if phi is None:
        lu = scipy.linalg.lu_factor(system, check_finite=False)
        phi = scipy.linalg.lu_solve(lu, h0, check_finite=False)

    residual = system @ phi - h0
    bound = _RESIDUAL_RTOL * (1.0 + float(np.linalg.norm(h0)))
    if float(np.linalg.norm(residual)) > bound:
        # one step of iterative refinement before giving up
        lu = scipy.linalg.lu_factor(system, check_finite=False)
        phi = phi - scipy.linalg.lu_solve(lu, residual, check_finite=False)
        residual = system @ phi - h0
        if float(np.linalg.norm(residual)) > bound:
            raise NumericalError(
                f"ridge solve residual {np.linalg.norm(residual):.3e} exceeds {bound:.3e}"
            )
    return SolveOutput(phi=phi, residual_norm=float(np.linalg.norm(residual)),
                       condition_hint=condition_hint)


def velocity(
    eval_points: np.ndarray,
    positions: np.ndarray,
    scores: np.ndarray,
    phi: np.ndarray,
    weights: np.ndarray,
    kernel: KernelConfig,
    sigma2: float,
) -> np.ndarray:
    """Transport field sum_j w_j phi_j (k(., X_j) s_j + grad_y k(., X_j)) at eval points."""
    E = np.atleast_2d(np.asarray(eval_points, dtype=float))
    X = np.atleast_2d(np.asarray(positions, dtype=float))
    S = np.atleast_2d(np.asarray(scores, dtype=float))
    phi = np.asarray(phi, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if X.shape != S.shape:
        raise DimensionMismatchError(f"positions {X.shape} and scores {S.shape} differ")
    if phi.shape != (X.shape[0],) or weights.shape != (X.shape[0],):
        raise DimensionMismatchError("phi/weights do not match the particle count")
    c = weights * phi
    r2 = kernels.sq_dists(E, X)
    kc = kernels._g0(kernel, sigma2, r2) * c[None, :]
    drift = kc @ S
    # grad_y k(e, X_j) = -2 g1 (e - X_j)
    gc = -2.0 * kernels._g1(kernel, sigma2, r2) * c[None, :]
    repulsion = gc.sum(axis=1)[:, None] * E - gc @ X
    return drift + repulsion


def ksd(
    positions: np.ndarray,
    weights: np.ndarray,
    target_score: ScoreField,
    kernel: KernelConfig = KernelConfig(family=KernelFamily.INVERSE_MULTIQUADRIC),
) -> float:
    """Kernelised Stein discrepancy of the weighted ensemble towards the target.

    V-statistic sum_ij w_i w_j xi(x_i, x_j) with the Stein kernel built from the
    target's score (diagonal included); defaults to the inverse-multiquadric base
    kernel customary for this diagnostic.
    """
    X = np.atleast_2d(np.asarray(positions, dtype=float))
    w = np.asarray(weights, dtype=float)
    if w.shape != (X.shape[0],):
        raise DimensionMismatchError("weights do not match the particle count")
    if abs(w.sum() - 1.0) > 1e-9:
        raise NumericalError("weights must sum to one")
    S = np.atleast_2d(np.asarray(target_score(X), dtype=float))
    sigma2 = kernels.resolve_bandwidth(kernel, X)
    xi = ksd_gram(X, S, kernel, sigma2)
    return float(w @ xi @ w)
