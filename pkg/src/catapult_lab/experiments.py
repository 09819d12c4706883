"""Experiment drivers: scenario comparisons, beta sweeps, warmup sweeps.

The heavy loops live here.  The two-parameter models get dedicated fast
recurrences that return the full (u_t, v_t) series; they compute exactly the
same update as :func:`catapult_lab.optim.run` (verified in the test suite)
but avoid per-step callback overhead, which matters for the 100-point beta
sweeps.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import theory
from .baselines import BaselineSolution, min_l1_baseline, min_l2_baseline
from .models import (
    DiagonalNetState,
    RegressionDataset,
    eval_ldn,
    ldn_hvp,
    population_test_loss,
)
from .optim import (
    NO_SWITCH,
    Constant,
    LinearWarmup,
    Schedule,
    SwitchMode,
    SwitchPolicy,
    lr_at,
    mss,
    run,
)
from .spectral import sharpness_exact_2x2, sharpness_power
from .trajectory import CatapultEvent, Trajectory, detect_catapults

Array = np.ndarray

__all__ = [
    "Problem",
    "scalar_relu_problem",
    "simple2d_problem",
    "ldn_problem",
    "ScalarRun",
    "run_scalar_relu",
    "run_simple2d",
    "scalar_run_trajectory",
    "ScenarioResult",
    "scenario_compare",
    "BetaSweepRow",
    "beta_sweep_scalar",
    "GeneralizedSweepRow",
    "generalized_sweep_simple2d",
    "warm_start_ldn",
    "SweepCell",
    "SweepResult",
    "alpha_eta_sweep",
]


# ---------------------------------------------------------------------------
# problem bundles: loss/grad plus a sharpness probe
# ---------------------------------------------------------------------------

@dataclass
class Problem:
    name: str
    dim: int
    eval_fn: Callable[[Array], tuple]
    sharpness_fn: Callable[[Array], float]
    hessian_fn: Optional[Callable[[Array], Array]] = None


def scalar_relu_problem() -> Problem:
    def eval_fn(theta: Array) -> tuple:
        u, v = float(theta[0]), float(theta[1])
        if u > 0.0:
            return 0.5 * u * u * v * v, np.array([u * v * v, u * u * v])
        return 0.0, np.zeros(2)

    def hessian_fn(theta: Array) -> Array:
        u, v = float(theta[0]), float(theta[1])
        if u > 0.0:
            return np.array([[v * v, 2.0 * u * v], [2.0 * u * v, u * u]])
        return np.zeros((2, 2))

    def sharpness_fn(theta: Array) -> float:
        # closed form for the 2x2 top eigenvalue, probed every step in
        # switch-armed runs (equality with sharpness_exact_2x2 is unit-tested)
        u, v = float(theta[0]), float(theta[1])
        if u <= 0.0:
            return 0.0
        u2, v2 = u * u, v * v
        tr = u2 + v2
        return 0.5 * (tr + math.sqrt(tr * tr + 12.0 * u2 * v2))

    return Problem("scalar_relu", 2, eval_fn, sharpness_fn, hessian_fn)


def simple2d_problem() -> Problem:
    def eval_fn(theta: Array) -> tuple:
        u, v = float(theta[0]), float(theta[1])
        r = u * u - v * v - 1.0
        return 0.5 * r * r, np.array([2.0 * r * u, -2.0 * r * v])

    def hessian_fn(theta: Array) -> Array:
        u, v = float(theta[0]), float(theta[1])
        return np.array(
            [
                [6.0 * u * u - 2.0 * v * v - 2.0, -4.0 * u * v],
                [-4.0 * u * v, 6.0 * v * v - 2.0 * u * u + 2.0],
            ]
        )

    def sharpness_fn(theta: Array) -> float:
        u, v = float(theta[0]), float(theta[1])
        a = 6.0 * u * u - 2.0 * v * v - 2.0
        d = 6.0 * v * v - 2.0 * u * u + 2.0
        b = -4.0 * u * v
        return 0.5 * ((a + d) + math.sqrt((a - d) ** 2 + 4.0 * b * b))

    return Problem("simple2d", 2, eval_fn, sharpness_fn, hessian_fn)


def ldn_problem(
    data: RegressionDataset,
    probe_tol: float = 1e-7,
    probe_max_iters: int = 5000,
    probe_seed: int = 1234,
) -> Problem:
    """Diagonal-net problem over theta = [u, v]; the sharpness probe runs a
    power iteration warm-started from the previous probe's eigenvector."""
    X, y = data.inputs, data.targets
    n, d = data.n, data.d
    warm = {"vec": None}

    def eval_fn(theta: Array) -> tuple:
        u, v = theta[:d], theta[d:]
        r = X @ (u * u - v * v) - y
        loss = 0.5 * float(r @ r) / n
        s = (X.T @ r) * (2.0 / n)
        return loss, np.concatenate([s * u, -s * v])

    def sharpness_fn(theta: Array) -> float:
        state = DiagonalNetState(theta[:d], theta[d:])
        est = sharpness_power(
            lambda vec: ldn_hvp(state, data, vec),
            2 * d,
            tol=probe_tol,
            max_iters=probe_max_iters,
            seed=probe_seed,
            v0=warm["vec"],
        )
        warm["vec"] = est.eigvec
        return est.value

    return Problem("ldn", 2 * d, eval_fn, sharpness_fn, None)


# ---------------------------------------------------------------------------
# fast recurrences for the two-parameter models
# ---------------------------------------------------------------------------

@dataclass
class ScalarRun:
    """Full (u_t, v_t) series of a two-parameter run, t = 0..T."""

    u: Array
    v: Array
    eta: float          # base rate; the effective step size was (1+beta)*eta
    beta: float

    @property
    def steps(self) -> int:
        return self.u.size - 1

    def converged(self, u_tol: float = 1e-10, v2_tol: float = 1e-16) -> bool:
        return bool(
            abs(self.u[-1] - self.u[-2]) < u_tol and self.v[-1] * self.v[-1] < v2_tol
        )


def run_scalar_relu(u0: float, v0: float, eta: float, beta: float, steps: int) -> ScalarRun:
    """Heavy-ball recursion on L = (1/2) u^2 v^2 [u >= 0] at effective rate
    (1+beta)*eta, so the stability threshold sits at u^2 = 2/eta for every
    beta (matched-MSS parameterization)."""
    eff = (1.0 + beta) * eta
    us = np.empty(steps + 1)
    vs = np.empty(steps + 1)
    u, v = float(u0), float(v0)
    up, vp = u, v
    us[0] = u
    vs[0] = v
    for t in range(steps):
        if u > 0.0:
            gu = u * v * v
            gv = u * u * v
        else:
            gu = 0.0
            gv = 0.0
        un = u - eff * gu + beta * (u - up)
        vn = v - eff * gv + beta * (v - vp)
        up, vp, u, v = u, v, un, vn
        us[t + 1] = u
        vs[t + 1] = v
    return ScalarRun(us, vs, eta, beta)


def run_simple2d(u0: float, v0: float, eta: float, beta: float, steps: int) -> ScalarRun:
    """Same recursion for L = (1/2)(u^2 - v^2 - 1)^2."""
    eff = (1.0 + beta) * eta
    us = np.empty(steps + 1)
    vs = np.empty(steps + 1)
    u, v = float(u0), float(v0)
    up, vp = u, v
    us[0] = u
    vs[0] = v
    for t in range(steps):
        r = u * u - v * v - 1.0
        gu = 2.0 * r * u
        gv = -2.0 * r * v
        un = u - eff * gu + beta * (u - up)
        vn = v - eff * gv + beta * (v - vp)
        up, vp, u, v = u, v, un, vn
        us[t + 1] = u
        vs[t + 1] = v
    return ScalarRun(us, vs, eta, beta)


def scalar_run_trajectory(srun: ScalarRun, meta: Optional[dict] = None) -> Trajectory:
    """Vectorized per-step loss/sharpness records for a scalar ReLU run."""
    u, v = srun.u, srun.v
    pos = u > 0.0
    u2, v2 = u * u, v * v
    loss = np.where(pos, 0.5 * u2 * v2, 0.0)
    tr = u2 + v2
    lam = 0.5 * (tr + np.sqrt(tr * tr + 12.0 * u2 * v2))
    sharp = np.where(pos, lam, 0.0)
    n = u.size
    eta_eff = (1.0 + srun.beta) * srun.eta
    etas = np.full(n, eta_eff)
    msses = np.full(n, 2.0 * (1.0 + srun.beta) / eta_eff)
    params = np.column_stack([u, v])
    info = {"model": "scalar_relu", "beta": srun.beta, "eta": srun.eta, "diverged": False}
    if meta:
        info.update(meta)
    return Trajectory(
        t=np.arange(n, dtype=np.int64),
        loss=loss,
        eta=etas,
        mss=msses,
        sharpness=sharp,
        beta=np.full(n, srun.beta),
        params=params,
        meta=info,
    )


# ---------------------------------------------------------------------------
# four-scenario comparison (plain, plain-with-momentum, and the two switches)
# ---------------------------------------------------------------------------

SCENARIOS = ("gd", "phb", "gd_to_phb", "phb_to_gd")


@dataclass
class ScenarioResult:
    trajectories: dict
    s0: float
    delta_s: dict
    eta_gd: float
    beta: float
    epsilon: float

    def ordering_ok(self, margin_frac: float = 0.01) -> bool:
        """Strict ordering gd < phb_to_gd < gd_to_phb < phb with margins of
        at least margin_frac * delta_s(gd) between neighbors."""
        d = self.delta_s
        m = margin_frac * d["gd"]
        return (
            d["gd"] + m <= d["phb_to_gd"]
            and d["phb_to_gd"] + m <= d["gd_to_phb"]
            and d["gd_to_phb"] + m <= d["phb"]
        )


def scenario_compare(
    problem: Problem,
    init: Array,
    epsilon: float,
    beta: float,
    steps: int,
    eta: Optional[float] = None,
    record_every: int = 1,
) -> ScenarioResult:
    """Run the four optimizer scenarios from one initialization at matched MSS.

    The base rate is eta = (2 + epsilon)/S0 unless given, so the starting
    sharpness sits just above the stability threshold; momentum runs use
    (1+beta) times that.  Mid-run switches fire at the first downward MSS
    crossing and rescale the rate to keep the threshold fixed.
    """
    init = np.asarray(init, dtype=float)
    s0 = float(problem.sharpness_fn(init))
    eta_gd = (2.0 + epsilon) / s0 if eta is None else eta
    eta_phb = (1.0 + beta) * eta_gd

    def go(schedule_eta: float, b: float, switch: SwitchPolicy) -> Trajectory:
        return run(
            problem.eval_fn,
            init,
            Schedule(Constant(schedule_eta)),
            beta=b,
            steps=steps,
            switch=switch,
            sharpness_probe=problem.sharpness_fn,
            record_every=record_every,
            meta={"model": problem.name},
        )

    trajs = {
        "gd": go(eta_gd, 0.0, NO_SWITCH),
        "phb": go(eta_phb, beta, NO_SWITCH),
        "gd_to_phb": go(eta_gd, 0.0, SwitchPolicy(SwitchMode.GD_THEN_PHB, beta)),
        "phb_to_gd": go(eta_phb, beta, SwitchPolicy(SwitchMode.PHB_THEN_GD, beta)),
    }
    delta = {k: s0 - t.final_sharpness for k, t in trajs.items()}
    return ScenarioResult(trajs, s0, delta, eta_gd, beta, epsilon)


# ---------------------------------------------------------------------------
# beta sweep on the scalar model: stabilization quantities vs momentum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaSweepRow:
    beta: float
    tau_u: Optional[int]
    C_u: float
    C_v: float
    C_v_tail_bound: float
    inv_factor: float          # 1 / (1 + eta * C_v)
    u_inf_bound: float
    delta_s_bound: float       # u0^2 - bound^2
    delta_s_measured: float    # u0^2 - u_T^2
    u_final: float
    converged: bool
    tau_0: Optional[int]


def beta_sweep_scalar(
    u0: float,
    v0: float,
    eta: float,
    betas: Sequence[float],
    steps: int,
    epsilon: Optional[float] = None,
) -> List[BetaSweepRow]:
    """For each beta, run the matched-MSS recursion and compute the
    stabilization quantities and both sides of the sharpness-drop bound."""
    if epsilon is None:
        epsilon = eta * u0 * u0 - 2.0  # init placed at u0^2 = (2 + eps)/eta
    rows: List[BetaSweepRow] = []
    for beta in betas:
        srun = run_scalar_relu(u0, v0, eta, beta, steps)
        tau0 = theory.compute_tau_0(srun.u)
        tau = theory.compute_tau_u(srun.u, eta, epsilon)
        if tau is None or tau < 1:
            rows.append(
                BetaSweepRow(
                    beta, tau, math.nan, math.nan, math.nan, math.nan, math.nan,
                    math.nan, u0 * u0 - float(srun.u[-1]) ** 2, float(srun.u[-1]),
                    False, tau0,
                )
            )
            continue
        cu = theory.compute_Cu(srun.u, tau, beta)
        cv, tail = theory.compute_Cv(srun.v, tau, beta, eta, epsilon)
        ub = theory.u_inf_upper_bound(cu, cv, eta)
        u_t = float(srun.u[-1])
        rows.append(
            BetaSweepRow(
                beta=beta,
                tau_u=tau,
                C_u=cu,
                C_v=cv,
                C_v_tail_bound=tail,
                inv_factor=1.0 / (1.0 + eta * cv),
                u_inf_bound=ub,
                delta_s_bound=u0 * u0 - ub * ub,
                delta_s_measured=u0 * u0 - u_t * u_t,
                u_final=u_t,
                converged=srun.converged() and tau0 is None,
                tau_0=tau0,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# generalized sweep on the simple 2-D model via gradient-flow projections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneralizedSweepRow:
    beta: float
    tau_u: Optional[int]
    C_u: float
    C_v: float
    s0: float                  # sharpness of the projected start
    s_final: float             # sharpness of the projected end
    delta_s_measured: float
    delta_s_bound: float       # s0 - bound^2
    u_final: float
    converged: bool


def _project_series_simple2d(us: Array, vs: Array) -> tuple:
    """Vectorized gradient-flow limits (u*, v*) for every iterate; requires
    every u_t != 0 (the conserved product pins each flow in a half plane)."""
    c = us * vs
    u_star = np.sqrt((1.0 + np.sqrt(1.0 + 4.0 * c * c)) / 2.0)
    u_star = np.where(us < 0.0, -u_star, u_star)
    v_star = c / u_star
    return u_star, v_star


def generalized_sweep_simple2d(
    u0: float,
    v0: float,
    eta: float,
    epsilon: float,
    betas: Sequence[float],
    steps: int,
) -> List[GeneralizedSweepRow]:
    """Matched-MSS runs on (1/2)(u^2 - v^2 - 1)^2; each iterate is projected
    to its gradient-flow minimum to evaluate the generalized quantities and
    the predicted sharpness reduction."""
    thr = (2.0 - epsilon) / eta
    scale_next = None
    rows: List[GeneralizedSweepRow] = []
    for beta in betas:
        srun = run_simple2d(u0, v0, eta, beta, steps)
        if not (np.isfinite(srun.u[-1]) and np.isfinite(srun.v[-1])):
            rows.append(
                GeneralizedSweepRow(beta, None, math.nan, math.nan, math.nan,
                                    math.nan, math.nan, math.nan, math.nan, False)
            )
            continue
        u_star, v_star = _project_series_simple2d(srun.u, srun.v)
        sharp = theory.simple2d_min_sharpness(v_star)
        hits = np.nonzero(sharp < thr)[0]
        tau = int(hits[0]) if hits.size else None
        s0 = float(sharp[0])
        s_fin = float(sharp[-1])
        if tau is None or tau < 1:
            rows.append(
                GeneralizedSweepRow(beta, tau, math.nan, math.nan, s0, s_fin,
                                    s0 - s_fin, math.nan, float(srun.u[-1]), False)
            )
            continue
        sq = np.sqrt(sharp)
        cu = float((sq[tau] - beta * sq[tau - 1]) / (1.0 - beta))
        # squared displacement along the leading eigendirection (u*, -v*)/norm
        du = srun.u - u_star
        dv = srun.v - v_star
        nrm = np.sqrt(u_star * u_star + v_star * v_star)
        ip = (u_star * du - v_star * dv) / nrm
        cv = (1.0 + beta) / (1.0 - beta) * float(np.sum(ip[tau:] ** 2))
        bound = theory.u_inf_upper_bound(cu, cv, eta)
        du_fin = abs(float(srun.u[-1] - srun.u[-2]))
        rows.append(
            GeneralizedSweepRow(
                beta=beta,
                tau_u=tau,
                C_u=cu,
                C_v=cv,
                s0=s0,
                s_final=s_fin,
                delta_s_measured=s0 - s_fin,
                delta_s_bound=s0 - bound * bound,
                u_final=float(srun.u[-1]),
                converged=du_fin < 1e-10,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# diagonal net: warm start and the init-scale x final-rate sweep
# ---------------------------------------------------------------------------

def warm_start_ldn(
    data: RegressionDataset,
    alpha: float,
    eta_small: float,
    loss_threshold: float = 1e-3,
    max_steps: int = 10_000_000,
) -> DiagonalNetState:
    """Plain GD from u = v = alpha * ones at a small stable rate until the
    training loss drops below ``loss_threshold``; places the iterate near a
    minimum so a larger rate can then be applied."""
    if loss_threshold <= 0:
        raise ValueError("loss_threshold must be positive")
    X, y = data.inputs, data.targets
    n, d = data.n, data.d
    u = np.full(d, float(alpha))
    v = np.full(d, float(alpha))
    for t in range(max_steps):
        r = X @ (u * u - v * v) - y
        loss = 0.5 * float(r @ r) / n
        if loss < loss_threshold:
            return DiagonalNetState(u, v)
        s = (X.T @ r) * (2.0 / n)
        u = u - eta_small * (s * u)
        v = v + eta_small * (s * v)
    raise RuntimeError(
        f"warm start did not reach loss < {loss_threshold} within {max_steps} steps"
    )


@dataclass
class SweepCell:
    alpha: float
    eta_f: float
    beta: float
    final_test_loss: float
    final_train_loss: float
    final_sharpness: float
    final_mss: float
    diverged: bool
    catapult_count: int
    steps_run: int


@dataclass
class SweepResult:
    alphas: List[float]
    eta_fs: List[float]
    beta: float
    cells: List[SweepCell]            # GD and momentum cells interleaved by config order
    l1: BaselineSolution
    l2: BaselineSolution

    def cell(self, alpha: float, eta_f: float, beta: float) -> SweepCell:
        for c in self.cells:
            if c.alpha == alpha and c.eta_f == eta_f and c.beta == beta:
                return c
        raise KeyError((alpha, eta_f, beta))

    def test_curve(self, eta_f: float, beta: float) -> Array:
        return np.array(
            [self.cell(a, eta_f, beta).final_test_loss for a in self.alphas]
        )

    def alpha_bar(self, eta_f: float, beta: float, fraction: float = 0.1) -> Optional[float]:
        """Smallest alpha where the test loss has come down through
        fraction * (l2 baseline): the curve must have exceeded the threshold
        at some smaller alpha, so the rich-regime start does not count."""
        thr = fraction * self.l2.test_loss
        curve = self.test_curve(eta_f, beta)
        seen_above = False
        for a, val in zip(self.alphas, curve):
            if seen_above and val < thr:
                return a
            if val >= thr:
                seen_above = True
        return None


def _sweep_cell(
    data: RegressionDataset,
    alpha: float,
    eta_f: float,
    beta: float,
    eta_i: float,
    total_steps_multiple: int,
    record_every: int,
    kappa: float,
    rho: float,
    early_stop: bool,
) -> SweepCell:
    d = data.d
    warmup_steps = round(eta_f * 1e6)
    steps = total_steps_multiple * warmup_steps
    problem = ldn_problem(data)
    init = np.concatenate([np.full(d, alpha), np.full(d, alpha)])
    stop_rule = None
    if early_stop:
        last = {"s": None}

        def stop_rule(t: int, loss: float, sharp: float) -> bool:
            prev = last["s"]
            last["s"] = sharp
            if t <= warmup_steps or loss > 1e-10 or prev is None:
                return False
            return abs(sharp - prev) <= 1e-6 * abs(prev)

    traj = run(
        problem.eval_fn,
        init,
        Schedule(LinearWarmup(eta_i, eta_f, warmup_steps)),
        beta=beta,
        steps=steps,
        sharpness_probe=problem.sharpness_fn,
        record_every=record_every,
        record_params=False,
        early_stop=stop_rule,
        meta={"model": "ldn", "alpha": alpha, "eta_f": eta_f},
    )
    theta = np.asarray(traj.meta["final_theta"])
    w = theta[:d] ** 2 - theta[d:] ** 2
    events = [] if traj.diverged else detect_catapults(traj, kappa, rho)
    return SweepCell(
        alpha=alpha,
        eta_f=eta_f,
        beta=beta,
        final_test_loss=population_test_loss(w, data),
        final_train_loss=float(traj.loss[-1]),
        final_sharpness=traj.final_sharpness,
        final_mss=mss(eta_f, beta),
        diverged=traj.diverged,
        catapult_count=len(events),
        steps_run=len(traj) - 1,
    )


def _sweep_cell_star(args) -> SweepCell:
    return _sweep_cell(*args)


def alpha_eta_sweep(
    data: RegressionDataset,
    alphas: Sequence[float],
    eta_fs: Sequence[float],
    beta: float = 0.9,
    eta_i: float = 1e-8,
    total_steps_multiple: int = 10,
    record_every: int = 50,
    kappa: float = 5.0,
    rho: float = 0.2,
    early_stop: bool = True,
    include_gd: bool = True,
    threads: int = 1,
) -> SweepResult:
    """Init-scale x final-rate sweep with linear warmup over round(eta_f*1e6)
    steps from eta_i.  Each cell trains to 10x the warmup length (early
    stopping once interpolation is reached after warmup and the sharpness
    probe is stable), then records the closed-form test loss, final
    sharpness against the final-rate MSS, and the catapult count.
    """
    betas = ([0.0] if include_gd else []) + [beta]
    jobs = [
        (data, float(a), float(ef), b, eta_i, total_steps_multiple,
         record_every, kappa, rho, early_stop)
        for ef in eta_fs
        for a in alphas
        for b in betas
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(_sweep_cell_star, jobs))
    else:
        cells = [_sweep_cell_star(j) for j in jobs]
    return SweepResult(
        alphas=[float(a) for a in alphas],
        eta_fs=[float(e) for e in eta_fs],
        beta=beta,
        cells=cells,
        l1=min_l1_baseline(data),
        l2=min_l2_baseline(data),
    )
