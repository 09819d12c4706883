"""Stabilization quantities, energy bounds, and gradient-flow limits.

For the scalar ReLU pair trained at effective rate (1+beta)*eta, the u
sequence is monotone non-increasing.  Its limit admits an upper bound built
from two run statistics: the de-momentumed value of u when it first drops
below the stability threshold, and the accumulated squared oscillation
afterwards.  The same construction generalizes to other losses by projecting
iterates to their gradient-flow limits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

Array = np.ndarray

__all__ = [
    "StabilizationQuantities",
    "EnergyStepReport",
    "GDLowerBound",
    "compute_tau_u",
    "compute_tau_0",
    "compute_Cu",
    "compute_Cv",
    "u_inf_upper_bound",
    "lemma1_limit",
    "energy",
    "energy_step_check",
    "gd_lower_bound",
    "gf_closed_form_2dldn",
    "closest_minimum_simple2d",
    "simple2d_min_sharpness",
    "simple2d_min_eigvec",
    "gf_integrate",
    "generalized_quantities",
    "cubic_inequality",
]


@dataclass(frozen=True)
class StabilizationQuantities:
    tau_0: Optional[int]
    tau_u: Optional[int]
    C_u: float
    C_v: float
    C_v_tail_bound: float
    u_inf_bound: float
    beta: float
    eta: float
    epsilon: float
    converged: Optional[bool] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @staticmethod
    def from_json(text: str) -> "StabilizationQuantities":
        return StabilizationQuantities(**json.loads(text))


# ---------------------------------------------------------------------------
# run statistics for the scalar model
# ---------------------------------------------------------------------------

def compute_tau_u(u_series: Array, eta: float, epsilon: float) -> Optional[int]:
    """First index with u_t^2 < (2 - epsilon)/eta, or None if never reached."""
    if not (0.0 < epsilon < 2.0):
        raise ValueError("epsilon must be in (0, 2)")
    u = np.asarray(u_series, dtype=float)
    hits = np.nonzero(u * u < (2.0 - epsilon) / eta)[0]
    return int(hits[0]) if hits.size else None


def compute_tau_0(u_series: Array) -> Optional[int]:
    """First index with u_t < 0, or None."""
    u = np.asarray(u_series, dtype=float)
    hits = np.nonzero(u < 0.0)[0]
    return int(hits[0]) if hits.size else None


def compute_Cu(u_series: Array, tau_u: int, beta: float) -> float:
    """(u_{tau} - beta * u_{tau-1}) / (1 - beta); needs a predecessor."""
    if tau_u < 1:
        raise ValueError("tau_u must be >= 1 (the formula needs u_{tau_u - 1})")
    u = np.asarray(u_series, dtype=float)
    return float((u[tau_u] - beta * u[tau_u - 1]) / (1.0 - beta))


def compute_Cv(
    v_series: Array, tau_u: int, beta: float, eta: float, epsilon: float
) -> tuple:
    """Scaled oscillation sum (1+beta)/(1-beta) * sum_{t >= tau_u} v_t^2.

    The infinite sum is truncated at the end of the series; the second return
    value bounds the dropped tail via the post-threshold geometric
    contraction v_{t+1}^2 < (1-epsilon)^2 v_t^2, so callers can verify the
    truncation was adequate.
    """
    v = np.asarray(v_series, dtype=float)
    if v.size <= tau_u:
        raise ValueError("series must extend past tau_u")
    scale = (1.0 + beta) / (1.0 - beta)
    total = scale * float(np.sum(v[tau_u:] ** 2))
    rho = (1.0 - epsilon) ** 2
    tail = scale * float(v[-1] ** 2) * rho / (1.0 - rho)
    return total, tail


def u_inf_upper_bound(C_u: float, C_v: float, eta: float) -> float:
    """C_u / (1 + eta * C_v)."""
    if C_v < 0:
        raise ValueError("C_v must be nonnegative")
    if eta <= 0:
        raise ValueError("eta must be positive")
    return C_u / (1.0 + eta * C_v)


def lemma1_limit(u_series: Array, tau_0: Optional[int], beta: float) -> float:
    """Exact limit of u once it crosses zero: momentum decays geometrically,
    leaving (u_{tau0} - beta * u_{tau0-1}) / (1 - beta)."""
    if tau_0 is None:
        raise ValueError("u never crossed zero; the closed form does not apply")
    if tau_0 < 1:
        raise ValueError("tau_0 must be >= 1")
    u = np.asarray(u_series, dtype=float)
    return float((u[tau_0] - beta * u[tau_0 - 1]) / (1.0 - beta))


# ---------------------------------------------------------------------------
# elliptical energy (plain GD on the scalar model)
# ---------------------------------------------------------------------------

def energy(u, v, eta: float):
    """Elliptical energy (u - sqrt(2/eta))^2 + v^2/2; accepts arrays."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    c = math.sqrt(2.0 / eta)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = (u - c) ** 2 + 0.5 * v * v
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EnergyStepReport:
    ok: Array                 # per applicable step: inequality satisfied (to fp noise)
    applicable: Array         # mask of steps with u_t >= 1/sqrt(eta)
    max_violation: float      # max relative excess of P_{t+1} over its bound


def energy_step_check(u_series: Array, v_series: Array, eta: float) -> EnergyStepReport:
    """Check P_{t+1} <= P_t * exp(2 eta^2 u_t^2 v_t^2) wherever u_t >= 1/sqrt(eta).

    Exact in exact arithmetic for plain GD; the report carries the maximum
    relative excess so callers can assert it is pure rounding noise.
    """
    u = np.asarray(u_series, dtype=float)
    v = np.asarray(v_series, dtype=float)
    P = energy(u, v, eta)
    applicable = u[:-1] >= 1.0 / math.sqrt(eta)
    bound = P[:-1] * np.exp(2.0 * eta * eta * u[:-1] ** 2 * v[:-1] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = (P[1:] - bound) / np.maximum(bound, 1e-300)
    excess = np.where(applicable, excess, -np.inf)
    max_violation = float(np.max(excess)) if excess.size else -math.inf
    ok = excess <= 0.0
    return EnergyStepReport(ok[applicable], applicable, max_violation)


@dataclass(frozen=True)
class GDLowerBound:
    bound: float              # floor on lim u_t from the measured energy at tau_u
    tau_u: int
    P_tau: float              # measured energy at tau_u
    P_tau_analytic_bound: float


def gd_lower_bound(
    u_series: Array, v_series: Array, eta: float, epsilon: float
) -> GDLowerBound:
    """Nonasymptotic floor sqrt(2/eta) - sqrt(P exp(4 eta^2 u^2 P / (eps(2-eps))))
    evaluated at the threshold-crossing step, together with the closed-form
    ceiling on the energy there (for cross-checking the measured value)."""
    tau = compute_tau_u(u_series, eta, epsilon)
    if tau is None:
        raise ValueError("tau_u absent: u never dropped below the threshold")
    u = np.asarray(u_series, dtype=float)
    v = np.asarray(v_series, dtype=float)
    P_tau = float(energy(u[tau], v[tau], eta))
    growth = math.exp(4.0 * eta * eta * u[tau] ** 2 * P_tau / (epsilon * (2.0 - epsilon)))
    bound = math.sqrt(2.0 / eta) - math.sqrt(P_tau * growth)
    v0 = float(v[0])
    analytic = (epsilon / eta + 0.5 * v0 * v0) * math.exp(
        2.0 * (2.0 + epsilon) * math.sqrt((2.0 + epsilon) / (2.0 - epsilon))
        + 2.0 * (2.0 + epsilon) * math.sqrt(2.0 * epsilon / (2.0 - epsilon))
    )
    return GDLowerBound(bound, tau, P_tau, analytic)


def cubic_inequality(z):
    """f(z) = 3 z^3 - 8 sqrt(2) z^2 + 14 z - 4 sqrt(2), nonnegative on z >= 1.

    Its local minimum sits exactly at (sqrt(2), 0), which is what makes the
    per-step energy inequality tight."""
    z = np.asarray(z, dtype=float)
    s2 = math.sqrt(2.0)
    out = 3.0 * z**3 - 8.0 * s2 * z**2 + 14.0 * z - 4.0 * s2
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# gradient flow for the simple 2-D model
# ---------------------------------------------------------------------------

def gf_closed_form_2dldn(u0: float, v0: float) -> tuple:
    """Gradient-flow limit of L = (1/2)(u^2 - v^2 - 1)^2 from (u0, v0).

    The flow conserves the product u*v, which pins the limit on the minima
    hyperbola u^2 - v^2 = 1:

        u_inf = sqrt((1 + sqrt(1 + 4 u0^2 v0^2)) / 2),  v_inf = u0 v0 / u_inf.

    Restricted to the analyzed case u0 > 0 with loss below 1/2 (the flow then
    provably stays in the right half plane).
    """
    loss = 0.5 * (u0 * u0 - v0 * v0 - 1.0) ** 2
    if not (u0 > 0.0 and loss < 0.5):
        raise ValueError("requires u0 > 0 and loss(u0, v0) < 1/2")
    return _gf_limit_right_half(u0, v0)


def _gf_limit_right_half(u0: float, v0: float) -> tuple:
    c = u0 * v0
    u_inf = math.sqrt((1.0 + math.sqrt(1.0 + 4.0 * c * c)) / 2.0)
    v_inf = c / u_inf if u_inf != 0.0 else 0.0
    return u_inf, v_inf


def closest_minimum_simple2d(u0: float, v0: float) -> tuple:
    """Gradient-flow projection used when computing generalized quantities.

    Valid for any u0 != 0: the conserved product u*v keeps the flow inside
    its half plane, so the limit is the closed form above with the sign of u
    carried through.  u0 = 0 is the stable manifold of the saddle and has no
    well-defined minimum; it is rejected.
    """
    if u0 == 0.0:
        raise ValueError("u0 = 0 flows to the saddle, not a minimum")
    if u0 > 0.0:
        return _gf_limit_right_half(u0, v0)
    ui, vi = _gf_limit_right_half(-u0, v0)
    return -ui, vi


def simple2d_min_sharpness(v_star) -> Array:
    """Sharpness 8 v*^2 + 4 at a minimum (u*, v*) with u*^2 = v*^2 + 1."""
    v_star = np.asarray(v_star, dtype=float)
    out = 8.0 * v_star * v_star + 4.0
    return float(out) if out.ndim == 0 else out


def simple2d_min_eigvec(u_star: float, v_star: float) -> Array:
    """Unit leading eigenvector at a minimum: proportional to (u*, -v*)."""
    vec = np.array([u_star, -v_star], dtype=float)
    return vec / np.linalg.norm(vec)


@dataclass(frozen=True)
class GFResult:
    theta: Array
    converged: bool
    t_end: float


def gf_integrate(
    grad_fn: Callable[[Array], Array],
    theta0: Array,
    tol: float = 1e-8,
    t_max: float = 50.0,
) -> GFResult:
    """Integrate d theta/dt = -grad L with an adaptive embedded Runge-Kutta
    pair (Dormand-Prince 5(4), rtol 1e-12 / atol 1e-14) until the gradient
    norm falls below ``tol`` or ``t_max`` is reached.

    The gradient norm stalls at a noise floor near rtol * curvature * scale
    once the state reaches the minimum manifold, so the integration
    tolerances must sit well below ``tol`` / curvature; the endpoint error is
    then about tol / curvature, far below 1e-6 for the losses used here.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    theta0 = np.asarray(theta0, dtype=float)

    def rhs(_t, y):
        return -np.asarray(grad_fn(y), dtype=float)

    def stall(_t, y):
        return float(np.linalg.norm(grad_fn(y))) - tol

    stall.terminal = True
    stall.direction = -1
    if stall(0.0, theta0) <= 0.0:
        return GFResult(theta0.copy(), True, 0.0)
    sol = solve_ivp(
        rhs, (0.0, t_max), theta0, method="RK45", rtol=1e-12, atol=1e-14, events=stall
    )
    theta = np.asarray(sol.y[:, -1], dtype=float)
    converged = bool(sol.t_events[0].size > 0)
    return GFResult(theta, converged, float(sol.t[-1]))


# ---------------------------------------------------------------------------
# generalized quantities via gradient-flow projections
# ---------------------------------------------------------------------------

def generalized_quantities(
    thetas: Sequence[Array],
    closest_min: Callable[[Array], Array],
    min_sharpness: Callable[[Array], float],
    min_eigvec: Callable[[Array], Array],
    eta: float,
    epsilon: float,
    beta: float,
    converged: Optional[bool] = None,
) -> StabilizationQuantities:
    """Project each iterate to its gradient-flow limit and build the bound.

    tau_u is the first step whose projected minimum has sharpness below
    (2 - epsilon)/eta.  C_u de-momentums sqrt(S) at that crossing and C_v
    accumulates the squared leading-eigendirection displacement from the
    projected minima afterwards.  The resulting u_inf_bound caps sqrt(S) of
    the reachable minimum.
    """
    if not (0.0 < epsilon < 2.0):
        raise ValueError("epsilon must be in (0, 2)")
    stars = [np.asarray(closest_min(np.asarray(th, dtype=float))) for th in thetas]
    sharp = np.array([min_sharpness(s) for s in stars])
    thr = (2.0 - epsilon) / eta
    hits = np.nonzero(sharp < thr)[0]
    tau = int(hits[0]) if hits.size else None
    if tau is None:
        raise ValueError("tau_u absent: projected sharpness never crossed the threshold")
    if tau < 1:
        raise ValueError("tau_u must be >= 1")
    sq = np.sqrt(sharp)
    C_u = float((sq[tau] - beta * sq[tau - 1]) / (1.0 - beta))
    scale = (1.0 + beta) / (1.0 - beta)
    ips = np.array(
        [
            float(min_eigvec(stars[t]) @ (np.asarray(thetas[t], dtype=float) - stars[t])) ** 2
            for t in range(tau, len(stars))
        ]
    )
    C_v = scale * float(np.sum(ips))
    rho = (1.0 - epsilon) ** 2
    tail = scale * float(ips[-1]) * rho / (1.0 - rho) if ips.size else 0.0
    bound = u_inf_upper_bound(C_u, C_v, eta)
    return StabilizationQuantities(
        tau_0=None,
        tau_u=tau,
        C_u=C_u,
        C_v=C_v,
        C_v_tail_bound=tail,
        u_inf_bound=bound,
        beta=beta,
        eta=eta,
        epsilon=epsilon,
        converged=converged,
    )
