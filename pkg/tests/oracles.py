"""Independent numerical oracles used to pin expected values.

These deliberately avoid the library's own code paths: finite differences
for derivatives, Jacobi rotations for dense eigenvalues, and support
enumeration for minimum-l1 interpolation.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def fd_gradient(loss_fn, theta: np.ndarray, h: float) -> np.ndarray:
    """Central finite differences of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        grad[i] = (loss_fn(theta + e) - loss_fn(theta - e)) / (2.0 * h)
    return grad


def fd_hessian(grad_fn, theta: np.ndarray, h: float) -> np.ndarray:
    """Central finite differences of a gradient, symmetrized."""
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    H = np.empty((n, n))
    for j in range(n):
        e = np.zeros_like(theta)
        e[j] = h
        H[:, j] = (grad_fn(theta + e) - grad_fn(theta - e)) / (2.0 * h)
    return 0.5 * (H + H.T)


def jacobi_eigenvalues(H: np.ndarray, sweeps: int = 100, tol: float = 1e-13) -> np.ndarray:
    """All eigenvalues of a symmetric matrix via classical Jacobi rotations."""
    A = np.array(H, dtype=float, copy=True)
    n = A.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off < tol * max(1.0, float(np.max(np.abs(np.diag(A))))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = 0.5 * math.atan2(2.0 * A[p, q], A[q, q] - A[p, p])
                c, s = math.cos(theta), math.sin(theta)
                J = np.eye(n)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))


def brute_force_min_l1(X: np.ndarray, y: np.ndarray, feas_tol: float = 1e-8):
    """Minimum-l1 interpolant by enumerating supports of size <= N.

    A linear-programming optimum is attained at a basic solution, so some
    support of size at most N carries it.  Every support is solved by least
    squares and kept when feasible.
    """
    n, d = X.shape
    best_w = None
    best_obj = math.inf
    scale = max(float(np.linalg.norm(y)), 1.0)
    for size in range(0, n + 1):
        for support in itertools.combinations(range(d), size):
            if size == 0:
                w_s = np.zeros(0)
                resid = float(np.linalg.norm(y))
            else:
                Xs = X[:, support]
                w_s, *_ = np.linalg.lstsq(Xs, y, rcond=None)
                resid = float(np.linalg.norm(Xs @ w_s - y))
            if resid <= feas_tol * scale:
                obj = float(np.abs(w_s).sum())
                if obj < best_obj:
                    best_obj = obj
                    w = np.zeros(d)
                    w[list(support)] = w_s
                    best_w = w
    return best_w, best_obj


def geometric_cv(v0: float, ratio: float, tau: int, total: int, beta: float) -> float:
    """Closed form of the truncated scaled sum for v_t^2 = v0^2 * ratio^t."""
    r = ratio
    s = sum(v0 * v0 * r**t for t in range(tau, total + 1))
    return (1.0 + beta) / (1.0 - beta) * s
