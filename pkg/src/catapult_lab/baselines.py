"""Interpolating baselines for the sparse-regression problem.

Both solvers return a coefficient vector satisfying X w = y (N <= d), one
with minimal Euclidean norm and one with minimal l1 norm, plus the exact
population test loss of that solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lstsq

from .models import RegressionDataset, population_test_loss

Array = np.ndarray

__all__ = ["BaselineSolution", "min_l2_baseline", "min_l1_baseline"]


@dataclass(frozen=True)
class BaselineSolution:
    w: Array
    test_loss: float
    converged: bool = True
    iterations: int = 0


def min_l2_baseline(data: RegressionDataset) -> BaselineSolution:
    """Least-norm interpolant w = X' (X X')^{-1} y via a symmetric
    positive-definite factorization of the Gram matrix; falls back to a
    tolerance-1e-10 pseudo-solve when the Gram matrix is rank deficient."""
    if data.n > data.d:
        raise ValueError("least-norm interpolation requires N <= d")
    X, y = data.inputs, data.targets
    G = X @ X.T
    try:
        coeffs = cho_solve(cho_factor(G), y)
    except np.linalg.LinAlgError:
        coeffs, *_ = lstsq(G, y, cond=1e-10)
    w = X.T @ coeffs
    return BaselineSolution(w, population_test_loss(w, data))


def min_l1_baseline(
    data: RegressionDataset,
    tol: float = 1e-9,
    max_iters: int = 50_000,
    rho: float = 1.0,
    over_relaxation: float = 1.6,
) -> BaselineSolution:
    """Basis pursuit min ||w||_1 s.t. X w = y, solved by ADMM.

    Splitting w = z with an indicator on the affine constraint: the w update
    projects onto {X w = y}, the z update soft-thresholds, and over-relaxation
    speeds the consensus.  Converged when both the primal residual ||w - z||
    and the dual residual rho * ||z - z_old|| fall below ``tol``.
    """
    if data.n > data.d:
        raise ValueError("basis pursuit requires the interpolation regime N <= d")
    X, y = data.inputs, data.targets
    d = data.d
    try:
        gram = cho_factor(X @ X.T)

        def project(v: Array) -> Array:
            return v - X.T @ cho_solve(gram, X @ v - y)
    except np.linalg.LinAlgError:
        pinv = np.linalg.pinv(X, rcond=1e-10)

        def project(v: Array) -> Array:
            return v - pinv @ (X @ v - y)

    kappa = 1.0 / rho
    w = project(np.zeros(d))
    z = w.copy()
    dual = np.zeros(d)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        w = project(z - dual)
        w_hat = over_relaxation * w + (1.0 - over_relaxation) * z
        z_old = z
        z = np.sign(w_hat + dual) * np.maximum(np.abs(w_hat + dual) - kappa, 0.0)
        dual = dual + w_hat - z
        primal = float(np.linalg.norm(w - z))
        dual_res = rho * float(np.linalg.norm(z - z_old))
        if primal < tol and dual_res < tol:
            converged = True
            break
    # report the projected (exactly feasible) iterate
    w_out = project(z)
    return BaselineSolution(w_out, population_test_loss(w_out, data), converged, it)
