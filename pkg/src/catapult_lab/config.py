"""Experiment configuration: schema, parsing, validation, hashing.

Configs are TOML documents (sections of key = value pairs) or equivalent
JSON.  Unknown keys are rejected with their full key path; all defaults are
resolved at parse time so the config embedded in run outputs is complete.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "config_hash"]


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending key path."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetConfig(_Model):
    n: int = 50
    d: int = 100
    sigma2: float = 5.0
    mu: float = 5.0
    k: int = 5
    seed: int = 4

    @model_validator(mode="after")
    def _check(self) -> "DatasetConfig":
        if not (1 <= self.k <= self.d):
            raise ValueError("k must satisfy 1 <= k <= d")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        return self


class InitConfig(_Model):
    kind: Literal["explicit", "alpha", "warm_start"] = "alpha"
    theta: Optional[List[float]] = None
    alpha: Optional[float] = 0.1
    eta_small: float = 1e-3
    loss_threshold: float = 1e-3

    @model_validator(mode="after")
    def _check(self) -> "InitConfig":
        if self.kind == "explicit" and not self.theta:
            raise ValueError("explicit init requires theta")
        if self.kind in ("alpha", "warm_start") and self.alpha is None:
            raise ValueError(f"{self.kind} init requires alpha")
        return self


class ScheduleConfig(_Model):
    kind: Literal["constant", "linear_warmup", "step_warmup"] = "constant"
    eta: float = 0.0201
    eta_i: float = 1e-8
    eta_f: float = 0.002
    warmup_steps: int = 2000
    eta_low: float = 1e-5
    eta_high: float = 0.0023
    switch_step: int = 10000
    terminate_warmup_on_mss_cross: bool = False

    @model_validator(mode="after")
    def _check(self) -> "ScheduleConfig":
        for name in ("eta", "eta_i", "eta_f", "eta_low", "eta_high"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eta_i > self.eta_f:
            raise ValueError("eta_i must not exceed eta_f")
        if self.warmup_steps < 1:
            raise ValueError("warmup_steps must be >= 1")
        return self


class SwitchConfig(_Model):
    mode: Literal["none", "gd_then_phb", "phb_then_gd"] = "none"
    beta: float = 0.9
    direction: Literal["down", "up"] = "down"

    @model_validator(mode="after")
    def _check(self) -> "SwitchConfig":
        if not (0.0 <= self.beta < 1.0):
            raise ValueError("beta must be in [0,1)")
        return self


class OptimizerConfig(_Model):
    beta: float = 0.0
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    switch: SwitchConfig = Field(default_factory=SwitchConfig)

    @model_validator(mode="after")
    def _check(self) -> "OptimizerConfig":
        if not (0.0 <= self.beta < 1.0):
            raise ValueError("beta must be in [0,1)")
        return self


class RunConfig(_Model):
    steps: int = 100_000
    record_every: int = 1
    epsilon: float = 0.01
    probe_tol: float = 1e-8

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not (0.0 < self.epsilon < 2.0):
            raise ValueError("epsilon must be in (0, 2)")
        if self.probe_tol <= 0:
            raise ValueError("probe_tol must be positive")
        return self


class SweepConfig(_Model):
    alphas: List[float] = Field(
        default_factory=lambda: [0.02, 0.05, 0.08, 0.10, 0.13, 0.16, 0.19, 0.22, 0.25, 0.28]
    )
    eta_fs: List[float] = Field(default_factory=lambda: [0.003, 0.0035, 0.005])
    beta: float = 0.9
    total_steps_multiple: int = 10
    record_every: int = 50
    include_gd: bool = True
    early_stop: bool = True

    @model_validator(mode="after")
    def _check(self) -> "SweepConfig":
        if not self.alphas or not self.eta_fs:
            raise ValueError("sweep grids must be nonempty")
        if any(e <= 0 for e in self.eta_fs):
            raise ValueError("eta_fs must be positive")
        if not (0.0 <= self.beta < 1.0):
            raise ValueError("beta must be in [0,1)")
        return self


class BetaSweepConfig(_Model):
    betas: List[float] = Field(default_factory=lambda: [round(0.01 * i, 2) for i in range(100)])
    steps: int = 100_000

    @model_validator(mode="after")
    def _check(self) -> "BetaSweepConfig":
        if any(not (0.0 <= b < 1.0) for b in self.betas):
            raise ValueError("betas must lie in [0,1)")
        return self


class DetectorConfig(_Model):
    kappa: float = 5.0
    rho: float = 0.2

    @model_validator(mode="after")
    def _check(self) -> "DetectorConfig":
        if self.kappa <= 1:
            raise ValueError("kappa must exceed 1")
        if not (0.0 <= self.rho < 1.0):
            raise ValueError("rho must be in [0,1)")
        return self


class SeedsConfig(_Model):
    probe_seed: int = 1234


class ExperimentConfig(_Model):
    model: Literal["scalar_relu", "ldn", "simple2d"] = "scalar_relu"
    output_dir: str = "out"
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    init: InitConfig = Field(default_factory=InitConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    run: RunConfig = Field(default_factory=RunConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    beta_sweep: BetaSweepConfig = Field(default_factory=BetaSweepConfig)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    seeds: SeedsConfig = Field(default_factory=SeedsConfig)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")


def _format_validation_error(err: ValidationError) -> str:
    parts = []
    for item in err.errors():
        path = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{path}: {item['msg']}")
    return "; ".join(parts)


def parse_config(source) -> ExperimentConfig:
    """Parse a TOML or JSON config from a path or literal text.

    Raises ConfigError naming the offending key path on unknown keys, type
    mismatches, or constraint violations.
    """
    if isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, str):
        text = source
        if "\n" not in source and not source.lstrip().startswith("{"):
            try:
                if Path(source).exists():
                    text = Path(source).read_text()
            except (OSError, ValueError):
                pass
    else:
        raise ConfigError(f"cannot read config from {source!r}")
    stripped = text.lstrip()
    try:
        if stripped.startswith("{"):
            payload = json.loads(text)
        else:
            payload = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"config is not valid TOML or JSON: {exc}") from exc
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from exc


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable short hash of the fully resolved config."""
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]
