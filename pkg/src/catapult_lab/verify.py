"""Named numerical checks of every bound and invariant, with margins.

Each check returns (passed, margin, detail); the margin is positive slack in
the check's own units.  The CLI aggregates these into a JSON report and a
nonzero exit code on any failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Callable, List, Optional

import numpy as np

from . import theory
from .baselines import min_l1_baseline, min_l2_baseline
from .experiments import (
    beta_sweep_scalar,
    generalized_sweep_simple2d,
    run_scalar_relu,
    scalar_relu_problem,
    scalar_run_trajectory,
    scenario_compare,
    simple2d_problem,
)
from .models import generate_sparse_regression
from .spectral import sharpness_exact_2x2, sharpness_power
from .trajectory import detect_catapults

__all__ = ["CheckResult", "run_all_checks", "FIG2"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "passed", bool(self.passed))
        object.__setattr__(self, "margin", float(self.margin))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Fig2Config:
    """Reference two-parameter configuration used throughout the checks."""

    u0: float = 10.0
    v0: float = 1e-6
    epsilon: float = 0.01
    steps: int = 100_000

    @property
    def eta(self) -> float:
        return (2.0 + self.epsilon) / (self.u0 * self.u0)


FIG2 = Fig2Config()


def _crossing_run():
    """A momentum run engineered so u crosses zero (the dead branch);
    moderate beta keeps the closed-form limit numerically benign."""
    return run_scalar_relu(2.0, 0.9, (2.0 + 0.5) / 4.0, 0.6, 20_000), 0.6


def check_lemma_u_monotone() -> CheckResult:
    worst = -math.inf
    for beta in (0.0, 0.3, 0.9, 0.99):
        srun = run_scalar_relu(FIG2.u0, FIG2.v0, FIG2.eta, beta, FIG2.steps)
        worst = max(worst, float(np.max(np.diff(srun.u))))
    srun, _ = _crossing_run()
    worst = max(worst, float(np.max(np.diff(srun.u))))
    return CheckResult(
        "u-monotone-nonincreasing", worst <= 1e-12, 1e-12 - worst,
        f"max per-step u increase {worst:.3e} (tolerance 1e-12)",
    )


def check_limit_after_zero_crossing() -> CheckResult:
    srun, beta = _crossing_run()
    tau0 = theory.compute_tau_0(srun.u)
    if tau0 is None:
        return CheckResult("u-limit-after-zero-crossing", False, -math.inf,
                           "engineered run failed to cross zero")
    lim = theory.lemma1_limit(srun.u, tau0, beta)
    err = abs(float(srun.u[-1]) - lim)
    return CheckResult(
        "u-limit-after-zero-crossing", err <= 1e-8, 1e-8 - err,
        f"|u_T - closed form| = {err:.3e} at tau_0 = {tau0}",
    )


def check_upper_bound_converged_runs() -> CheckResult:
    worst = math.inf
    detail = []
    for beta in (0.0, 0.3, 0.6, 0.9):
        srun = run_scalar_relu(FIG2.u0, FIG2.v0, FIG2.eta, beta, FIG2.steps)
        tau = theory.compute_tau_u(srun.u, FIG2.eta, FIG2.epsilon)
        cu = theory.compute_Cu(srun.u, tau, beta)
        cv, _ = theory.compute_Cv(srun.v, tau, beta, FIG2.eta, FIG2.epsilon)
        bound = theory.u_inf_upper_bound(cu, cv, FIG2.eta)
        slack = bound * (1.0 + 1e-3) - float(srun.u[-1])
        worst = min(worst, slack)
        detail.append(f"beta={beta}: u_T={srun.u[-1]:.6f} <= bound {bound:.6f}")
    return CheckResult("u-upper-bound", worst >= 0.0, worst, "; ".join(detail))


def check_gd_lower_bound() -> CheckResult:
    srun = run_scalar_relu(FIG2.u0, FIG2.v0, FIG2.eta, 0.0, FIG2.steps)
    lb = theory.gd_lower_bound(srun.u, srun.v, FIG2.eta, FIG2.epsilon)
    slack = float(srun.u[-1]) - (lb.bound - 1e-8)
    ok = slack >= 0.0 and lb.P_tau <= lb.P_tau_analytic_bound
    return CheckResult(
        "gd-lower-bound", ok, slack,
        f"u_T={srun.u[-1]:.6f} >= {lb.bound:.6f}; "
        f"P_tau {lb.P_tau:.3e} <= analytic {lb.P_tau_analytic_bound:.3e}",
    )


def check_energy_steps() -> CheckResult:
    srun = run_scalar_relu(FIG2.u0, FIG2.v0, FIG2.eta, 0.0, FIG2.steps)
    rep = theory.energy_step_check(srun.u, srun.v, FIG2.eta)
    ok = rep.max_violation <= 1e-12
    return CheckResult(
        "energy-step-inequality", ok, 1e-12 - rep.max_violation,
        f"max relative excess {rep.max_violation:.3e} over "
        f"{int(np.sum(rep.applicable))} applicable steps",
    )


def check_oscillation_at_crossing() -> CheckResult:
    srun = run_scalar_relu(FIG2.u0, FIG2.v0, FIG2.eta, 0.0, FIG2.steps)
    tau = theory.compute_tau_u(srun.u, FIG2.eta, FIG2.epsilon)
    cap = math.sqrt((2.0 + FIG2.epsilon) / (2.0 - FIG2.epsilon)) / FIG2.eta
    val = float(srun.v[tau - 1] ** 2)
    return CheckResult(
        "oscillation-cap-at-crossing", val <= cap, cap - val,
        f"v_(tau-1)^2 = {val:.3e} <= {cap:.3f}",
    )


def check_cubic_inequality() -> CheckResult:
    zs = np.linspace(1.0, 1e3, 1_000_000)
    vals = theory.cubic_inequality(zs)
    mn = float(np.min(vals))
    s2 = math.sqrt(2.0)
    at_min = theory.cubic_inequality(s2)
    deriv = 9.0 * s2 * s2 - 16.0 * math.sqrt(2.0) * s2 + 14.0
    ok = mn >= -1e-12 and abs(at_min) <= 1e-12 and abs(deriv) <= 1e-12
    return CheckResult(
        "cubic-inequality", ok, mn,
        f"grid min {mn:.3e}; f(sqrt2)={at_min:.2e}; f'(sqrt2)={deriv:.2e}",
    )


def check_gf_against_closed_form(n_starts: int = 50, seed: int = 7) -> CheckResult:
    rng = np.random.Generator(np.random.PCG64(seed))
    prob = simple2d_problem()
    worst_err = 0.0
    worst_drift = 0.0
    count = 0
    while count < n_starts:
        u0 = rng.uniform(0.2, 6.0)
        v0 = rng.uniform(-6.0, 6.0)
        if 0.5 * (u0 * u0 - v0 * v0 - 1.0) ** 2 >= 0.5:
            continue
        count += 1
        exact = np.array(theory.gf_closed_form_2dldn(u0, v0))
        res = theory.gf_integrate(lambda th: prob.eval_fn(th)[1], np.array([u0, v0]))
        err = float(np.max(np.abs(res.theta - exact)))
        drift = abs(res.theta[0] * res.theta[1] - u0 * v0) / max(abs(u0 * v0), 1e-30)
        worst_err = max(worst_err, err)
        worst_drift = max(worst_drift, drift)
    ok = worst_err <= 1e-6 and worst_drift <= 1e-8
    return CheckResult(
        "gradient-flow-closed-form", ok, 1e-6 - worst_err,
        f"max endpoint error {worst_err:.3e}; max uv drift {worst_drift:.3e} "
        f"over {n_starts} starts",
    )


def check_cv_tail(betas=(0.0, 0.5, 0.9)) -> CheckResult:
    worst = math.inf
    for beta in betas:
        srun = run_scalar_relu(FIG2.u0, FIG2.v0, FIG2.eta, beta, FIG2.steps)
        tau = theory.compute_tau_u(srun.u, FIG2.eta, FIG2.epsilon)
        cv, tail = theory.compute_Cv(srun.v, tau, beta, FIG2.eta, FIG2.epsilon)
        if cv > 0:
            worst = min(worst, 1e-6 * cv - tail)
    return CheckResult(
        "cv-tail-negligible", worst >= 0.0, worst,
        "truncation tail below 1e-6 of the partial sum on all runs",
    )


def check_scenario_ordering() -> CheckResult:
    prob = scalar_relu_problem()
    sc = scenario_compare(
        prob, np.array([FIG2.u0, FIG2.v0]), FIG2.epsilon, 0.9, steps=FIG2.steps
    )
    d = sc.delta_s
    margin = min(
        d["phb_to_gd"] - d["gd"], d["gd_to_phb"] - d["phb_to_gd"], d["phb"] - d["gd_to_phb"]
    )
    return CheckResult(
        "scenario-ordering", sc.ordering_ok(), margin,
        f"deltaS gd={d['gd']:.4f} < phb_to_gd={d['phb_to_gd']:.4f} "
        f"< gd_to_phb={d['gd_to_phb']:.4f} < phb={d['phb']:.4f}",
    )


def check_detector_reference_runs() -> CheckResult:
    phb = scalar_run_trajectory(
        run_scalar_relu(FIG2.u0, FIG2.v0, FIG2.eta, 0.9, FIG2.steps)
    )
    events = detect_catapults(phb, kappa=5.0, rho=0.02)
    quiet = scalar_run_trajectory(run_scalar_relu(3.0, 0.5, 1e-4, 0.0, 5000))
    none = detect_catapults(quiet, kappa=5.0, rho=0.02)
    ok = len(events) == 1 and len(none) == 0
    return CheckResult(
        "catapult-detector-references", ok, float(1 - abs(len(events) - 1) - len(none)),
        f"momentum run events={len(events)}, quiet run events={len(none)}",
    )


def check_generalized_bound() -> CheckResult:
    rows = generalized_sweep_simple2d(
        5.060, 4.950, 0.01, 0.004, [0.0, 0.3, 0.6, 0.9], 60_000
    )
    worst = math.inf
    for r in rows:
        worst = min(worst, r.delta_s_measured - r.delta_s_bound)
    return CheckResult(
        "generalized-bound-below-measured", worst >= 0.0, worst,
        f"min (measured - bound) = {worst:.4f} across betas",
    )


def check_baselines() -> CheckResult:
    data = generate_sparse_regression(50, 100, 5.0, 5.0, 5, seed=0)
    l1 = min_l1_baseline(data)
    l2 = min_l2_baseline(data)
    feas1 = float(np.linalg.norm(data.inputs @ l1.w - data.targets))
    feas2 = float(np.linalg.norm(data.inputs @ l2.w - data.targets))
    scale = float(np.linalg.norm(data.targets))
    n1 = float(np.abs(l1.w).sum())
    n2l1 = float(np.abs(l2.w).sum())
    e2 = float(np.linalg.norm(l2.w))
    e1 = float(np.linalg.norm(l1.w))
    ok = (
        feas1 <= 1e-8 * scale
        and feas2 <= 1e-8 * scale
        and n1 <= n2l1 + 1e-9
        and e2 <= e1 + 1e-9
    )
    return CheckResult(
        "interpolating-baselines", ok, n2l1 - n1,
        f"l1 objective {n1:.4f} <= l2's l1 norm {n2l1:.4f}; "
        f"l2 norm {e2:.4f} <= l1's l2 norm {e1:.4f}; feasibility {feas1:.1e}/{feas2:.1e}",
    )


def check_power_iteration() -> CheckResult:
    rng = np.random.Generator(np.random.PCG64(3))
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 12))
        A = rng.standard_normal((n, n))
        H = 0.5 * (A + A.T)
        est = sharpness_power(lambda v: H @ v, n, tol=1e-10, seed=int(rng.integers(1e6)))
        exact = float(np.max(np.linalg.eigvalsh(H)))
        worst = max(worst, abs(est.value - exact) / max(1.0, abs(exact)))
    neg = np.diag([-5.0, 1.0])
    est = sharpness_power(lambda v: neg @ v, 2, tol=1e-12)
    ok = worst <= 1e-6 and abs(est.value - 1.0) <= 1e-9
    return CheckResult(
        "power-iteration-largest-eigenvalue", ok, 1e-6 - worst,
        f"max relative error {worst:.2e}; diag(-5,1) -> {est.value:.9f}",
    )


ALL_CHECKS: List[Callable[[], CheckResult]] = [
    check_lemma_u_monotone,
    check_limit_after_zero_crossing,
    check_upper_bound_converged_runs,
    check_gd_lower_bound,
    check_energy_steps,
    check_oscillation_at_crossing,
    check_cubic_inequality,
    check_gf_against_closed_form,
    check_cv_tail,
    check_scenario_ordering,
    check_detector_reference_runs,
    check_generalized_bound,
    check_baselines,
    check_power_iteration,
]


def run_all_checks(verbose: bool = False) -> List[CheckResult]:
    results = []
    for fn in ALL_CHECKS:
        res = fn()
        results.append(res)
        if verbose:
            status = "PASS" if res.passed else "FAIL"
            print(f"[{status}] {res.name}: {res.detail}")
    return results
