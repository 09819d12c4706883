"""Analytic models: losses, gradients, Hessians, and synthetic regression data.

Three differentiable models are implemented with hand-derived derivatives:

* scalar ReLU pair  ``L(u, v) = (1/2) u^2 v^2 [u >= 0]``
* simple 2-D pair   ``L(u, v) = (1/2) (u^2 - v^2 - 1)^2``
* diagonal net      ``f(x) = <u*u - v*v, x>`` with mean-squared error

All operations here are pure functions of their inputs and safe to call
concurrently.  Datasets are immutable after creation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

Array = np.ndarray

__all__ = [
    "EvalResult",
    "ScalarReluState",
    "Simple2DState",
    "DiagonalNetState",
    "RegressionDataset",
    "eval_scalar_relu",
    "eval_simple2d",
    "eval_ldn",
    "ldn_hvp",
    "generate_sparse_regression",
    "population_test_loss",
    "save_dataset",
    "load_dataset",
]


def _require_finite(name: str, *values: float) -> None:
    for x in values:
        if not np.all(np.isfinite(x)):
            raise ValueError(f"{name} must be finite, got {x!r}")


@dataclass(frozen=True)
class ScalarReluState:
    """Two-weight ReLU chain: first-layer weight u, second-layer weight v."""

    u: float
    v: float

    def __post_init__(self) -> None:
        _require_finite("ScalarReluState", self.u, self.v)

    def as_vector(self) -> Array:
        return np.array([self.u, self.v], dtype=float)


@dataclass(frozen=True)
class Simple2DState:
    """Point (u, v) for the single-datapoint diagonal-net surrogate loss."""

    u: float
    v: float

    def __post_init__(self) -> None:
        _require_finite("Simple2DState", self.u, self.v)

    def as_vector(self) -> Array:
        return np.array([self.u, self.v], dtype=float)


@dataclass(frozen=True)
class DiagonalNetState:
    """Parameter pair (u, v), each of length d; coefficients w = u*u - v*v."""

    u: Array
    v: Array

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError(f"u and v must be 1-D with equal length, got {u.shape} vs {v.shape}")
        _require_finite("DiagonalNetState", u, v)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def d(self) -> int:
        return self.u.size

    @property
    def w(self) -> Array:
        """Effective linear coefficients."""
        return self.u * self.u - self.v * self.v

    def as_vector(self) -> Array:
        return np.concatenate([self.u, self.v])

    @staticmethod
    def from_vector(theta: Array) -> "DiagonalNetState":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.size % 2:
            raise ValueError("parameter vector must be 1-D of even length")
        d = theta.size // 2
        return DiagonalNetState(theta[:d], theta[d:])


@dataclass(frozen=True)
class EvalResult:
    loss: float
    grad: Array
    hessian: Optional[Array] = None


@dataclass(frozen=True)
class RegressionDataset:
    """Noiseless sparse-regression instance; targets satisfy y = X w_star exactly."""

    inputs: Array
    targets: Array
    w_star: Array
    mu: Array
    sigma2: float
    seed: int
    k: int = 0

    def __post_init__(self) -> None:
        X = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("inputs must be N x d and targets length N")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]


# ---------------------------------------------------------------------------
# scalar ReLU pair
# ---------------------------------------------------------------------------

def eval_scalar_relu(state: ScalarReluState) -> EvalResult:
    """Loss, gradient and 2x2 Hessian of L = (1/2) u^2 v^2 [u >= 0].

    At u = 0 the subgradient convention is gradient = 0 and Hessian = 0,
    consistent with the loss vanishing on u < 0.
    """
    u, v = state.u, state.v
    if u > 0.0:
        loss = 0.5 * u * u * v * v
        grad = np.array([u * v * v, u * u * v])
        hess = np.array([[v * v, 2.0 * u * v], [2.0 * u * v, u * u]])
    else:
        loss = 0.0
        grad = np.zeros(2)
        hess = np.zeros((2, 2))
    return EvalResult(loss, grad, hess)


# ---------------------------------------------------------------------------
# simple 2-D model
# ---------------------------------------------------------------------------

def eval_simple2d(state: Simple2DState) -> EvalResult:
    """Loss, gradient and Hessian of L = (1/2)(u^2 - v^2 - 1)^2."""
    u, v = state.u, state.v
    r = u * u - v * v - 1.0
    loss = 0.5 * r * r
    grad = np.array([2.0 * r * u, -2.0 * r * v])
    hess = np.array(
        [
            [6.0 * u * u - 2.0 * v * v - 2.0, -4.0 * u * v],
            [-4.0 * u * v, 6.0 * v * v - 2.0 * u * u + 2.0],
        ]
    )
    return EvalResult(loss, grad, hess)


# ---------------------------------------------------------------------------
# diagonal linear network
# ---------------------------------------------------------------------------

def eval_ldn(state: DiagonalNetState, data: RegressionDataset) -> EvalResult:
    """Mean-squared-error loss (1/2N) sum_n r_n^2 with r_n = <u*u - v*v, x_n> - y_n.

    The gradient is returned as the length-2d concatenation [dL/du, dL/dv].
    No Hessian matrix is materialized; use :func:`ldn_hvp`.
    """
    if state.d != data.d:
        raise ValueError(f"state dimension {state.d} != dataset dimension {data.d}")
    X, y = data.inputs, data.targets
    n = data.n
    r = X @ state.w - y
    loss = 0.5 * float(r @ r) / n
    s = (X.T @ r) * (2.0 / n)
    grad = np.concatenate([s * state.u, -s * state.v])
    return EvalResult(loss, grad, None)


def ldn_hvp(state: DiagonalNetState, data: RegressionDataset, vec: Array) -> Array:
    """Hessian-vector product of the diagonal-net loss, computed analytically.

    Differentiating the gradient once more gives two pieces: the Gauss-Newton
    term from the sensitivity of the residuals, plus a residual-weighted
    diagonal term from the second derivative of the squaring map.
    """
    vec = np.asarray(vec, dtype=float)
    d = state.d
    if state.d != data.d or vec.shape != (2 * d,):
        raise ValueError("dimension mismatch between state, dataset and vector")
    X, y = data.inputs, data.targets
    n = data.n
    u, v = state.u, state.v
    p, q = vec[:d], vec[d:]
    r = X @ state.w - y
    t = X @ (u * p - v * q)          # (1/2) <grad f_n, vec> per sample
    xt = X.T @ t
    s = (X.T @ r) * (2.0 / n)
    hu = (4.0 / n) * u * xt + s * p
    hv = -(4.0 / n) * v * xt - s * q
    return np.concatenate([hu, hv])


# ---------------------------------------------------------------------------
# data generation and population risk
# ---------------------------------------------------------------------------

def generate_sparse_regression(
    n: int,
    d: int,
    sigma2: float,
    mu,
    k: int,
    seed: int,
) -> RegressionDataset:
    """Draw x_n ~ N(mu, sigma2 * I_d) and set y_n = <w_star, x_n> with no noise.

    w_star has its first k entries equal to 1/sqrt(k) and the rest zero, so
    ||w_star||_2 = 1.  The same seed always reproduces bit-identical data
    (one dedicated PCG64 generator per dataset).
    """
    if not (1 <= k <= d):
        raise ValueError(f"sparsity k must satisfy 1 <= k <= d, got k={k}, d={d}")
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    mu_vec = np.broadcast_to(np.asarray(mu, dtype=float), (d,)).copy()
    rng = np.random.Generator(np.random.PCG64(seed))
    X = mu_vec + math.sqrt(sigma2) * rng.standard_normal((n, d))
    w_star = np.zeros(d)
    w_star[:k] = 1.0 / math.sqrt(k)
    y = X @ w_star
    return RegressionDataset(X, y, w_star, mu_vec, float(sigma2), int(seed), int(k))


def population_test_loss(w: Array, data: RegressionDataset) -> float:
    """Exact expected halved squared error over the input distribution.

    For x ~ N(mu, sigma2 I) this is (1/2)(w - w*)' (sigma2 I + mu mu') (w - w*),
    which removes test-set sampling variance from all comparisons.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != data.w_star.shape:
        raise ValueError("dimension mismatch")
    delta = w - data.w_star
    return 0.5 * (data.sigma2 * float(delta @ delta) + float(data.mu @ delta) ** 2)


# ---------------------------------------------------------------------------
# dataset serialization: CSV for samples plus a JSON sidecar for the config
# ---------------------------------------------------------------------------

def save_dataset(data: RegressionDataset, csv_path, sidecar_path=None) -> None:
    """Write one row per sample (x_1..x_d, y) and a JSON sidecar with the config."""
    csv_path = Path(csv_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{i + 1}" for i in range(data.d)] + ["y"])
        for xi, yi in zip(data.inputs, data.targets):
            writer.writerow([repr(float(val)) for val in xi] + [repr(float(yi))])
    sidecar = {
        "n": data.n,
        "d": data.d,
        "sigma2": data.sigma2,
        "mu": data.mu.tolist(),
        "k": data.k,
        "seed": data.seed,
    }
    sidecar_path.write_text(json.dumps(sidecar, indent=2))


def load_dataset(csv_path, sidecar_path=None) -> RegressionDataset:
    csv_path = Path(csv_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    meta = json.loads(sidecar_path.read_text())
    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "y":
            raise ValueError("dataset CSV must end with a 'y' column")
        for row in reader:
            rows.append([float(x) for x in row])
    arr = np.asarray(rows, dtype=float)
    X, y = arr[:, :-1], arr[:, -1]
    d = meta["d"]
    k = meta["k"]
    w_star = np.zeros(d)
    w_star[:k] = 1.0 / math.sqrt(k)
    return RegressionDataset(
        X, y, w_star, np.asarray(meta["mu"], dtype=float), meta["sigma2"], meta["seed"], k
    )
