"""Heavy-ball stepping, learning-rate schedules, stability threshold, switching.

The update rule is

    w_{t+1} = w_t - eta_t * grad(w_t) + beta * (w_t - w_{t-1}),

with beta = 0 giving plain gradient descent.  The maximum stable sharpness
(MSS) of this recursion is 2(1+beta)/eta: a quadratic mode with curvature
above that threshold diverges, below it contracts.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .trajectory import Trajectory

Array = np.ndarray

__all__ = [
    "Constant",
    "LinearWarmup",
    "StepWarmup",
    "Schedule",
    "OptimizerState",
    "SwitchMode",
    "SwitchPolicy",
    "DivergenceError",
    "lr_at",
    "mss",
    "step",
    "run",
    "DIVERGENCE_LIMIT",
]

DIVERGENCE_LIMIT = 1e12


class DivergenceError(RuntimeError):
    """Raised when a step receives a non-finite gradient."""


@dataclass(frozen=True)
class Constant:
    eta: float

    def __post_init__(self) -> None:
        if self.eta <= 0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True)
class LinearWarmup:
    eta_i: float
    eta_f: float
    warmup_steps: int

    def __post_init__(self) -> None:
        if self.eta_i <= 0 or self.eta_f <= 0:
            raise ValueError("rates must be positive")
        if self.eta_i > self.eta_f:
            raise ValueError("eta_i must not exceed eta_f")
        if self.warmup_steps < 1:
            raise ValueError("warmup_steps must be >= 1")


@dataclass(frozen=True)
class StepWarmup:
    eta_low: float
    eta_high: float
    switch_step: int

    def __post_init__(self) -> None:
        if self.eta_low <= 0 or self.eta_high <= 0:
            raise ValueError("rates must be positive")


Variant = Union[Constant, LinearWarmup, StepWarmup]


@dataclass(frozen=True)
class Schedule:
    variant: Variant
    terminate_warmup_on_mss_cross: bool = False


def lr_at(schedule: Schedule, t: int, freeze_step: Optional[int] = None) -> float:
    """Learning rate at step t.

    If the warmup was terminated at ``freeze_step``, the rate is frozen at
    its value there for all later steps.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if freeze_step is not None and t > freeze_step:
        t = freeze_step
    v = schedule.variant
    if isinstance(v, Constant):
        return v.eta
    if isinstance(v, LinearWarmup):
        frac = min(t, v.warmup_steps) / v.warmup_steps
        return v.eta_i + (v.eta_f - v.eta_i) * frac
    if isinstance(v, StepWarmup):
        return v.eta_low if t < v.switch_step else v.eta_high
    raise TypeError(f"unknown schedule variant {v!r}")


def mss(eta: float, beta: float = 0.0) -> float:
    """Maximum stable sharpness 2(1+beta)/eta."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not (0.0 <= beta < 1.0):
        raise ValueError("beta must be in [0, 1)")
    return 2.0 * (1.0 + beta) / eta


@dataclass(frozen=True)
class OptimizerState:
    theta: Array
    theta_prev: Array
    step: int = 0

    @staticmethod
    def at(theta: Array) -> "OptimizerState":
        """Fresh state with zero initial velocity (theta_prev = theta)."""
        theta = np.asarray(theta, dtype=float)
        return OptimizerState(theta, theta.copy(), 0)


def step(state: OptimizerState, grad: Array, eta_t: float, beta: float) -> OptimizerState:
    """One heavy-ball update; beta = 0 reduces to plain gradient descent."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.theta.shape:
        raise ValueError("gradient dimension mismatch")
    if not np.all(np.isfinite(grad)):
        raise DivergenceError(f"non-finite gradient at step {state.step}")
    theta_new = state.theta - eta_t * grad + beta * (state.theta - state.theta_prev)
    return OptimizerState(theta_new, state.theta, state.step + 1)


class SwitchMode(enum.Enum):
    NONE = "none"
    GD_THEN_PHB = "gd_then_phb"
    PHB_THEN_GD = "phb_then_gd"


@dataclass(frozen=True)
class SwitchPolicy:
    """Mid-run optimizer flip, armed to fire at most once.

    The trigger is the first probe where the sharpness crosses the current
    MSS; ``direction="down"`` (the default) fires on a downward crossing.
    On firing, the learning rate is rescaled by (1+beta) or 1/(1+beta) so
    the MSS is unchanged.
    """

    mode: SwitchMode = SwitchMode.NONE
    beta: float = 0.0
    direction: str = "down"

    def __post_init__(self) -> None:
        if not (0.0 <= self.beta < 1.0):
            raise ValueError("beta must be in [0, 1)")
        if self.direction not in ("down", "up"):
            raise ValueError("direction must be 'down' or 'up'")


NO_SWITCH = SwitchPolicy()


def run(
    model_eval: Callable[[Array], tuple],
    init: Array,
    schedule: Schedule,
    beta: float,
    steps: int,
    switch: SwitchPolicy = NO_SWITCH,
    sharpness_probe: Optional[Callable[[Array], float]] = None,
    record_every: int = 1,
    record_params: Optional[bool] = None,
    early_stop: Optional[Callable[[int, float, float], bool]] = None,
    meta: Optional[dict] = None,
) -> Trajectory:
    """Iterate the heavy-ball recursion, recording loss/lr/MSS at every step.

    ``model_eval(theta)`` must return ``(loss, grad)``.  Sharpness is sampled
    through ``sharpness_probe`` every ``record_every`` steps, or every step
    for 2-parameter problems when a switch or warmup termination is armed
    (crossing-detection latency must not exceed the probe period).  The run
    is truncated and flagged diverged when the loss or parameter norm
    exceeds 1e12.  ``early_stop(t, loss, sharpness)``, polled at probe steps,
    may truncate the run without the diverged flag.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    theta = np.asarray(init, dtype=float).copy()
    dim = theta.size
    if record_params is None:
        record_params = dim <= 2
    armed = switch.mode is not SwitchMode.NONE
    watching = armed or schedule.terminate_warmup_on_mss_cross
    if watching and sharpness_probe is None:
        raise ValueError("a sharpness probe is required for switching or warmup termination")
    probe_every = 1 if (watching and dim <= 2) else record_every

    if switch.mode is SwitchMode.GD_THEN_PHB and beta != 0.0:
        raise ValueError("GD-then-PHB runs must start with beta = 0")
    if switch.mode is SwitchMode.PHB_THEN_GD and beta != switch.beta:
        raise ValueError("PHB-then-GD runs must start with beta = switch.beta")

    beta_active = beta
    lr_scale = 1.0
    fired = False
    fire_step = None
    freeze_step = None
    was_above = None
    early_stop_step = None

    n_rec = steps + 1
    ts = np.arange(n_rec, dtype=np.int64)
    losses = np.full(n_rec, np.nan)
    etas = np.full(n_rec, np.nan)
    msses = np.full(n_rec, np.nan)
    sharps = np.full(n_rec, np.nan)
    betas = np.full(n_rec, np.nan)
    params = np.full((n_rec, dim), np.nan) if record_params else None

    theta_prev = theta.copy()
    diverged = False
    t_stop = steps

    for t in range(steps + 1):
        loss, grad = model_eval(theta)

        if not math.isfinite(loss) or loss > DIVERGENCE_LIMIT or \
                float(np.max(np.abs(theta))) > DIVERGENCE_LIMIT:
            losses[t] = loss
            etas[t] = lr_at(schedule, t, freeze_step) * lr_scale
            msses[t] = 2.0 * (1.0 + beta_active) / etas[t]
            betas[t] = beta_active
            if params is not None:
                params[t] = theta
            diverged = True
            t_stop = t
            break

        stop_now = False
        if sharpness_probe is not None and (t % probe_every == 0 or t == steps):
            s = float(sharpness_probe(theta))
            sharps[t] = s
            cur_mss = 2.0 * (1.0 + beta_active) / (lr_at(schedule, t, freeze_step) * lr_scale)
            if schedule.terminate_warmup_on_mss_cross and freeze_step is None and s > cur_mss:
                freeze_step = t
            if armed and not fired and was_above is not None:
                crossed = (was_above and s < cur_mss) if switch.direction == "down" \
                    else (not was_above and s > cur_mss)
                if crossed:
                    # flip optimizer and rescale the rate in the same step, so
                    # the update at t already uses a consistent (eta, beta)
                    fired = True
                    fire_step = t
                    if switch.mode is SwitchMode.GD_THEN_PHB:
                        beta_active = switch.beta
                        lr_scale *= 1.0 + switch.beta
                    else:
                        beta_active = 0.0
                        lr_scale /= 1.0 + switch.beta
            was_above = s >= cur_mss
            if early_stop is not None and early_stop(t, loss, s):
                early_stop_step = t
                stop_now = True

        eta_t = lr_at(schedule, t, freeze_step) * lr_scale
        losses[t] = loss
        etas[t] = eta_t
        msses[t] = 2.0 * (1.0 + beta_active) / eta_t
        betas[t] = beta_active
        if params is not None:
            params[t] = theta

        if stop_now:
            t_stop = t
            break
        if t == steps:
            break
        if not np.all(np.isfinite(grad)):
            diverged = True
            t_stop = t
            break
        theta_new = theta - eta_t * grad + beta_active * (theta - theta_prev)
        theta_prev = theta
        theta = theta_new

    n_keep = t_stop + 1
    run_meta = {
        "beta": beta,
        "schedule": repr(schedule),
        "switch": {
            "mode": switch.mode.value,
            "beta": switch.beta,
            "fired": fired,
            "fire_step": fire_step,
        },
        "warmup_freeze_step": freeze_step,
        "early_stop_step": early_stop_step,
        "diverged": diverged,
        "final_theta": theta.tolist(),
    }
    if meta:
        run_meta.update(meta)
    return Trajectory(
        t=ts[:n_keep],
        loss=losses[:n_keep],
        eta=etas[:n_keep],
        mss=msses[:n_keep],
        sharpness=sharps[:n_keep],
        beta=betas[:n_keep],
        params=params[:n_keep] if params is not None else None,
        meta=run_meta,
    )
