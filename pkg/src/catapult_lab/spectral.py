"""Sharpness: leading Hessian eigenvalue and eigenvector.

Exact closed form for 2x2 Hessians; shifted power iteration against a
Hessian-vector-product callback for everything else.  The shift guarantees
convergence to the algebraically largest eigenvalue even when a negative
eigenvalue dominates in magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Array = np.ndarray

__all__ = [
    "SharpnessEstimate",
    "sharpness_exact_2x2",
    "sharpness_power",
    "grad_sharpness_fd",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 10_000
_SIGN_EPS = 1e-12


@dataclass(frozen=True)
class SharpnessEstimate:
    value: float
    eigvec: Array
    iterations: int
    residual: float
    converged: bool = True


def _normalize_sign(vec: Array) -> Array:
    """Deterministic orientation: first component above 1e-12 made positive."""
    for x in vec:
        if abs(x) > _SIGN_EPS:
            return vec if x > 0 else -vec
    return vec


def sharpness_exact_2x2(H: Array) -> SharpnessEstimate:
    """Largest eigenvalue and eigenvector of a symmetric 2x2 matrix."""
    H = np.asarray(H, dtype=float)
    if H.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    a, b, d = H[0, 0], H[0, 1], H[1, 1]
    tr = a + d
    disc = (a - d) ** 2 + 4.0 * b * b
    lam = 0.5 * (tr + math.sqrt(max(disc, 0.0)))
    # (H - lam I) v = 0; pick the better conditioned of the two row solutions
    v1 = np.array([b, lam - a])
    v2 = np.array([lam - d, b])
    v = v1 if float(v1 @ v1) >= float(v2 @ v2) else v2
    nrm = float(np.linalg.norm(v))
    if nrm < 1e-300:
        v = np.array([1.0, 0.0])  # H is a multiple of the identity
    else:
        v = v / nrm
    v = _normalize_sign(v)
    residual = float(np.linalg.norm(H @ v - lam * v))
    return SharpnessEstimate(lam, v, 0, residual)


def sharpness_power(
    hvp: Callable[[Array], Array],
    dim: int,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    seed: int = 0,
    v0: Optional[Array] = None,
) -> SharpnessEstimate:
    """Shifted power iteration for the algebraically largest eigenvalue.

    A handful of plain power steps estimate the spectral radius, which sets
    the shift c; iterating on H + cI then makes the target eigenvalue the
    dominant one.  Convergence is declared when
    ||H v - lambda v|| <= tol * max(1, |lambda|).  ``v0`` warm-starts the
    iteration (useful when probing along a trajectory).
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if v0 is not None:
        v = np.asarray(v0, dtype=float).copy()
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        v = rng.standard_normal(dim)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        v = np.zeros(dim)
        v[0] = 1.0
    else:
        v /= nrm
    v_start = v.copy()

    # estimate spectral radius with a few unshifted steps; restart the shifted
    # phase from the original vector so a magnitude-dominant negative mode
    # cannot trap the iteration on its own eigenvector
    radius = 0.0
    for _ in range(12):
        hv = np.asarray(hvp(v), dtype=float)
        nrm = float(np.linalg.norm(hv))
        radius = max(radius, nrm)
        if nrm < 1e-300:
            break
        v = hv / nrm
    shift = 1.25 * radius + tol
    v = v_start

    lam = 0.0
    residual = math.inf
    iters = 0
    for iters in range(1, max_iters + 1):
        hv = np.asarray(hvp(v), dtype=float)
        lam = float(v @ hv)
        residual = float(np.linalg.norm(hv - lam * v))
        if residual <= tol * max(1.0, abs(lam)):
            return SharpnessEstimate(lam, _normalize_sign(v), iters, residual, True)
        w = hv + shift * v
        nrm = float(np.linalg.norm(w))
        if nrm < 1e-300:
            # annihilated: v is (numerically) an eigenvector of the shift itself
            break
        v = w / nrm
    return SharpnessEstimate(lam, _normalize_sign(v), iters, residual, False)


def grad_sharpness_fd(
    hessian_fn: Callable[[Array], Array],
    theta: Array,
    h: Optional[float] = None,
) -> tuple:
    """Central finite differences of the sharpness S(theta), per coordinate.

    ``hessian_fn`` must return the (2x2) Hessian at a point.  Returns
    ``(grad, degenerate)`` where ``degenerate`` flags a leading eigenvalue
    whose gap to the second one is below 10h, making S non-smooth there.
    """
    theta = np.asarray(theta, dtype=float)
    if h is None:
        h = 1e-4 * (1.0 + float(np.linalg.norm(theta)))
    if h <= 0:
        raise ValueError("h must be positive")
    H0 = np.asarray(hessian_fn(theta), dtype=float)
    a, b, d = H0[0, 0], H0[0, 1], H0[1, 1]
    gap = math.sqrt(max((a - d) ** 2 + 4.0 * b * b, 0.0))  # lam_max - lam_min
    degenerate = gap < 10.0 * h

    def sharp(x: Array) -> float:
        return sharpness_exact_2x2(np.asarray(hessian_fn(x), dtype=float)).value

    grad = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        grad[i] = (sharp(theta + e) - sharp(theta - e)) / (2.0 * h)
    return grad, degenerate
