"""Trajectory records and catapult detection.

A catapult is an episode where the training loss spikes while the sharpness
drops drastically.  The detector below turns that definition into step
indices: an event opens when the loss rises a factor kappa above its running
minimum, closes when the loss returns to that floor, and is kept only when
the sharpness fell by at least a fraction rho of its pre-event value.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

Array = np.ndarray

__all__ = ["Trajectory", "CatapultEvent", "detect_catapults"]


@dataclass
class Trajectory:
    """Per-step records of a single optimizer run.

    ``sharpness`` is NaN at steps where it was not sampled.  ``params`` is
    kept only for small (2-parameter) problems by default.
    """

    t: Array
    loss: Array
    eta: Array
    mss: Array
    sharpness: Array
    beta: Optional[Array] = None
    params: Optional[Array] = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def diverged(self) -> bool:
        return bool(self.meta.get("diverged", False))

    def sharpness_samples(self) -> tuple:
        """(step indices, values) of the sampled sharpness series."""
        mask = np.isfinite(self.sharpness)
        return self.t[mask], self.sharpness[mask]

    @property
    def final_sharpness(self) -> float:
        idx, vals = self.sharpness_samples()
        if vals.size == 0:
            raise ValueError("trajectory has no sharpness samples")
        return float(vals[-1])

    @property
    def initial_sharpness(self) -> float:
        idx, vals = self.sharpness_samples()
        if vals.size == 0:
            raise ValueError("trajectory has no sharpness samples")
        return float(vals[0])

    def subsample(self, every: int) -> "Trajectory":
        """Keep every `every`-th record (plus the last one)."""
        keep = np.zeros(len(self), dtype=bool)
        keep[::every] = True
        keep[-1] = True
        return Trajectory(
            t=self.t[keep],
            loss=self.loss[keep],
            eta=self.eta[keep],
            mss=self.mss[keep],
            sharpness=self.sharpness[keep],
            beta=self.beta[keep] if self.beta is not None else None,
            params=self.params[keep] if self.params is not None else None,
            meta=dict(self.meta),
        )

    # -- serialization ------------------------------------------------------

    def to_csv(self, path) -> None:
        """Columns t, loss, eta, mss, sharpness (empty when unsampled), and
        p_1..p_k when parameters were recorded.  Floats use shortest
        round-trip decimal form."""
        path = Path(path)
        extra = []
        if self.params is not None:
            extra = [f"p_{i + 1}" for i in range(self.params.shape[1])]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "loss", "eta", "mss", "sharpness"] + extra)
            for i in range(len(self)):
                s = self.sharpness[i]
                row = [
                    int(self.t[i]),
                    repr(float(self.loss[i])),
                    repr(float(self.eta[i])),
                    repr(float(self.mss[i])),
                    "" if not math.isfinite(s) else repr(float(s)),
                ]
                if self.params is not None:
                    row += [repr(float(x)) for x in self.params[i]]
                writer.writerow(row)

    @staticmethod
    def from_csv(path) -> "Trajectory":
        path = Path(path)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            cols = {name: [] for name in header}
            for row in reader:
                for name, val in zip(header, row):
                    cols[name].append(val)
        t = np.asarray(cols["t"], dtype=np.int64)
        loss = np.asarray(cols["loss"], dtype=float)
        eta = np.asarray(cols["eta"], dtype=float)
        mss = np.asarray(cols["mss"], dtype=float)
        sharp = np.asarray([float(x) if x else np.nan for x in cols["sharpness"]])
        pcols = [name for name in header if name.startswith("p_")]
        params = None
        if pcols:
            params = np.column_stack([np.asarray(cols[c], dtype=float) for c in pcols])
        return Trajectory(t, loss, eta, mss, sharp, None, params, {})

    def save_meta(self, path) -> None:
        Path(path).write_text(json.dumps(self.meta, indent=2, default=str))


@dataclass(frozen=True)
class CatapultEvent:
    start: int
    peak_step: int
    end: int
    loss_spike_ratio: float
    sharpness_drop: float
    final_sharpness_over_mss: float
    overshoot: bool = False

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "peak_step": self.peak_step,
            "end": self.end,
            "loss_spike_ratio": self.loss_spike_ratio,
            "sharpness_drop": self.sharpness_drop,
            "final_sharpness_over_mss": self.final_sharpness_over_mss,
            "overshoot": self.overshoot,
        }


def _sample_at_or_before(steps: Array, values: Array, t: int) -> float:
    idx = np.searchsorted(steps, t, side="right") - 1
    if idx < 0:
        idx = 0
    return float(values[idx])


def _sample_at_or_after(steps: Array, values: Array, t: int) -> float:
    idx = np.searchsorted(steps, t, side="left")
    if idx >= steps.size:
        idx = steps.size - 1
    return float(values[idx])


def detect_catapults(traj: Trajectory, kappa: float = 5.0, rho: float = 0.2) -> List[CatapultEvent]:
    """Find loss-spike / sharpness-drop episodes.

    An episode opens at step t when loss_t >= kappa * (running minimum of the
    loss before t); it closes when the loss returns below that pre-spike
    minimum times 1.01, or at the end of the series.  The episode is kept
    only if the sharpness dropped by at least rho times its pre-event value.
    Events are additionally labeled ``overshoot`` when the trajectory's final
    sharpness sits more than 1.5x above the minimum reached after the event
    opened (the drop went past a flatter region and climbed back out).
    """
    s_steps, s_vals = traj.sharpness_samples()
    if s_vals.size == 0:
        raise ValueError("catapult detection requires a sharpness series")
    loss = traj.loss
    steps = traj.t
    n = loss.size
    final_sharp = float(s_vals[-1])

    events: List[CatapultEvent] = []
    run_min = math.inf
    in_event = False
    open_i = peak_i = 0
    peak_loss = 0.0
    floor = math.inf

    def close_event(close_i: int) -> None:
        t_open = int(steps[open_i])
        t_close = int(steps[close_i])
        pre_s = _sample_at_or_before(s_steps, s_vals, t_open)
        post_s = _sample_at_or_after(s_steps, s_vals, t_close)
        drop = pre_s - post_s
        if drop >= rho * pre_s:
            mask = s_steps >= t_open
            min_after = float(np.min(s_vals[mask])) if np.any(mask) else post_s
            events.append(
                CatapultEvent(
                    start=t_open,
                    peak_step=int(steps[peak_i]),
                    end=t_close,
                    loss_spike_ratio=float(peak_loss / floor),
                    sharpness_drop=float(drop),
                    final_sharpness_over_mss=float(post_s / traj.mss[close_i]),
                    overshoot=bool(final_sharp > 1.5 * min_after),
                )
            )

    for i in range(n):
        li = float(loss[i])
        if not in_event:
            if math.isfinite(run_min) and run_min > 0.0 and li >= kappa * run_min:
                in_event = True
                open_i = peak_i = i
                peak_loss = li
                floor = run_min
            else:
                run_min = min(run_min, li)
        else:
            if li > peak_loss:
                peak_loss = li
                peak_i = i
            if li < floor * (1.0 + 1e-2):
                close_event(i)
                in_event = False
                run_min = min(floor, li)
    if in_event:
        close_event(n - 1)
    return events
