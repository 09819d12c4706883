"""Command-line interface: run, sweep, scenarios, beta-sweep, verify-theory.

Outputs land under ``<output_dir>/<command>/<config-hash>/`` so reruns of the
same config are cache-addressable.  Files are written to temp names and
renamed atomically.  Exit codes: 0 success, 1 config error, 2 theory-check
failure, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import verify
from .baselines import min_l1_baseline, min_l2_baseline
from .config import ConfigError, ExperimentConfig, config_hash, parse_config
from .experiments import (
    Problem,
    alpha_eta_sweep,
    beta_sweep_scalar,
    generalized_sweep_simple2d,
    ldn_problem,
    scalar_relu_problem,
    scenario_compare,
    simple2d_problem,
    warm_start_ldn,
)
from .models import generate_sparse_regression, population_test_loss
from .optim import (
    Constant,
    LinearWarmup,
    Schedule,
    StepWarmup,
    SwitchMode,
    SwitchPolicy,
    run,
)
from .trajectory import detect_catapults

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_THEORY = 2
EXIT_RUNTIME = 3


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _atomic_csv(path: Path, header, rows) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    os.replace(tmp, path)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _build_schedule(cfg: ExperimentConfig) -> Schedule:
    sc = cfg.optimizer.schedule
    if sc.kind == "constant":
        variant = Constant(sc.eta)
    elif sc.kind == "linear_warmup":
        variant = LinearWarmup(sc.eta_i, sc.eta_f, sc.warmup_steps)
    else:
        variant = StepWarmup(sc.eta_low, sc.eta_high, sc.switch_step)
    return Schedule(variant, sc.terminate_warmup_on_mss_cross)


def _build_switch(cfg: ExperimentConfig) -> SwitchPolicy:
    sw = cfg.optimizer.switch
    return SwitchPolicy(SwitchMode(sw.mode), sw.beta, sw.direction)


def _dataset(cfg: ExperimentConfig):
    ds = cfg.dataset
    return generate_sparse_regression(ds.n, ds.d, ds.sigma2, ds.mu, ds.k, ds.seed)


def _problem_and_init(cfg: ExperimentConfig):
    data = None
    if cfg.model == "scalar_relu":
        problem = scalar_relu_problem()
    elif cfg.model == "simple2d":
        problem = simple2d_problem()
    else:
        data = _dataset(cfg)
        problem = ldn_problem(data, probe_tol=cfg.run.probe_tol,
                              probe_seed=cfg.seeds.probe_seed)
    ic = cfg.init
    if ic.kind == "explicit":
        init = np.asarray(ic.theta, dtype=float)
    elif cfg.model == "ldn" and ic.kind == "warm_start":
        state = warm_start_ldn(data, ic.alpha, ic.eta_small, ic.loss_threshold)
        init = state.as_vector()
    elif cfg.model == "ldn":
        d = cfg.dataset.d
        init = np.concatenate([np.full(d, ic.alpha), np.full(d, ic.alpha)])
    else:
        raise ConfigError(
            f"init.kind: two-parameter model '{cfg.model}' needs an explicit theta"
        )
    if init.size != problem.dim:
        raise ConfigError(
            f"init.theta: expected {problem.dim} parameters, got {init.size}"
        )
    return problem, init, data


def _out_dir(cfg: ExperimentConfig, command: str, override: Optional[str]) -> Path:
    base = Path(override) if override else Path(cfg.output_dir)
    path = base / command / config_hash(cfg)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_meta(outdir: Path, cfg: ExperimentConfig, command: str, extra=None) -> None:
    meta = {"command": command, "config_hash": config_hash(cfg), "config": cfg.to_dict()}
    if extra:
        meta.update(extra)
    _atomic_write(outdir / "meta.json", json.dumps(meta, indent=2, default=str))
    with open(outdir / "run.log", "a") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {command} completed\n")


def cmd_run(cfg: ExperimentConfig, out: Optional[str]) -> int:
    problem, init, _ = _problem_and_init(cfg)
    traj = run(
        problem.eval_fn,
        init,
        _build_schedule(cfg),
        beta=cfg.optimizer.beta,
        steps=cfg.run.steps,
        switch=_build_switch(cfg),
        sharpness_probe=problem.sharpness_fn,
        record_every=cfg.run.record_every,
        meta={"model": cfg.model},
    )
    outdir = _out_dir(cfg, "run", out)
    traj.to_csv(outdir / "trajectory.csv")
    events = detect_catapults(traj, cfg.detector.kappa, cfg.detector.rho)
    _atomic_write(
        outdir / "events.json",
        json.dumps({"count": len(events), "events": [e.to_dict() for e in events]},
                   indent=2),
    )
    _write_meta(outdir, cfg, "run", {"diverged": traj.diverged,
                                     "run_meta": traj.meta})
    print(f"run: {len(traj)} records, {len(events)} catapult(s) -> {outdir}")
    return EXIT_OK


def cmd_scenarios(cfg: ExperimentConfig, out: Optional[str]) -> int:
    problem, init, _ = _problem_and_init(cfg)
    record_every = cfg.run.record_every if problem.dim > 2 else 1
    result = scenario_compare(
        problem, init, cfg.run.epsilon, cfg.optimizer.switch.beta,
        steps=cfg.run.steps, record_every=record_every,
    )
    outdir = _out_dir(cfg, "scenarios", out)
    for name, traj in result.trajectories.items():
        traj.to_csv(outdir / f"trajectory_{name}.csv")
    d = result.delta_s
    rows = [
        [name, _fmt(result.s0), _fmt(result.s0 - d[name]), _fmt(d[name]),
         _fmt(d[name] / d["gd"] if d["gd"] else float("nan"))]
        for name in ("gd", "phb_to_gd", "gd_to_phb", "phb")
    ]
    _atomic_csv(outdir / "delta_s.csv",
                ["scenario", "s0", "s_final", "delta_s", "ratio_to_gd"], rows)
    _atomic_write(outdir / "delta_s.json", json.dumps(
        {"s0": result.s0, "delta_s": d, "ordering_ok": result.ordering_ok(),
         "eta_gd": result.eta_gd}, indent=2))
    _write_meta(outdir, cfg, "scenarios")
    print(f"scenarios: ordering_ok={result.ordering_ok()} -> {outdir}")
    return EXIT_OK


def cmd_beta_sweep(cfg: ExperimentConfig, out: Optional[str]) -> int:
    outdir = _out_dir(cfg, "beta-sweep", out)
    betas = cfg.beta_sweep.betas
    steps = cfg.beta_sweep.steps
    if cfg.model == "scalar_relu":
        theta = cfg.init.theta or [10.0, 1e-6]
        eta = cfg.optimizer.schedule.eta
        rows = beta_sweep_scalar(theta[0], theta[1], eta, betas, steps)
        header = ["beta", "tau_u", "C_u", "C_v", "C_v_tail_bound", "inv_factor",
                  "u_inf_bound", "delta_s_bound", "delta_s_measured", "u_final",
                  "converged"]
        out_rows = [
            [_fmt(r.beta), r.tau_u if r.tau_u is not None else "",
             _fmt(r.C_u), _fmt(r.C_v), _fmt(r.C_v_tail_bound), _fmt(r.inv_factor),
             _fmt(r.u_inf_bound), _fmt(r.delta_s_bound), _fmt(r.delta_s_measured),
             _fmt(r.u_final), r.converged]
            for r in rows
        ]
    elif cfg.model == "simple2d":
        theta = cfg.init.theta or [5.060, 4.950]
        rows = generalized_sweep_simple2d(
            theta[0], theta[1], cfg.optimizer.schedule.eta, cfg.run.epsilon,
            betas, steps,
        )
        header = ["beta", "tau_u", "C_u", "C_v", "s0", "s_final",
                  "delta_s_measured", "delta_s_bound", "converged"]
        out_rows = [
            [_fmt(r.beta), r.tau_u if r.tau_u is not None else "",
             _fmt(r.C_u), _fmt(r.C_v), _fmt(r.s0), _fmt(r.s_final),
             _fmt(r.delta_s_measured), _fmt(r.delta_s_bound), r.converged]
            for r in rows
        ]
    else:
        raise ConfigError("model: beta-sweep supports scalar_relu and simple2d")
    _atomic_csv(outdir / "beta_sweep.csv", header, out_rows)
    _write_meta(outdir, cfg, "beta-sweep")
    print(f"beta-sweep: {len(out_rows)} cells -> {outdir}")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, out: Optional[str], threads: int) -> int:
    if cfg.model != "ldn":
        raise ConfigError("model: sweep requires the ldn model")
    data = _dataset(cfg)
    sw = cfg.sweep
    result = alpha_eta_sweep(
        data, sw.alphas, sw.eta_fs, beta=sw.beta,
        total_steps_multiple=sw.total_steps_multiple,
        record_every=sw.record_every, kappa=cfg.detector.kappa,
        rho=cfg.detector.rho, early_stop=sw.early_stop,
        include_gd=sw.include_gd, threads=threads,
    )
    outdir = _out_dir(cfg, "sweep", out)
    header = ["alpha", "eta_f", "test_loss", "train_loss", "sharpness", "mss",
              "diverged", "catapults"]
    for beta, tag in ([(0.0, "gd")] if sw.include_gd else []) + [(sw.beta, "phb")]:
        rows = [
            [_fmt(c.alpha), _fmt(c.eta_f), _fmt(c.final_test_loss),
             _fmt(c.final_train_loss), _fmt(c.final_sharpness), _fmt(c.final_mss),
             c.diverged, c.catapult_count]
            for c in result.cells if c.beta == beta
        ]
        _atomic_csv(outdir / f"sweep_{tag}.csv", header, rows)
    baselines = {
        "l1_test_loss": result.l1.test_loss,
        "l2_test_loss": result.l2.test_loss,
        "l1_converged": result.l1.converged,
        "alpha_bar": {
            repr(ef): result.alpha_bar(ef, sw.beta) for ef in result.eta_fs
        },
    }
    _atomic_write(outdir / "baselines.json", json.dumps(baselines, indent=2))
    _write_meta(outdir, cfg, "sweep")
    print(f"sweep: {len(result.cells)} cells -> {outdir}")
    return EXIT_OK


def cmd_verify_theory(cfg: ExperimentConfig, out: Optional[str]) -> int:
    results = verify.run_all_checks(verbose=True)
    outdir = _out_dir(cfg, "verify-theory", out)
    report = {
        "passed": all(r.passed for r in results),
        "checks": [r.to_dict() for r in results],
    }
    _atomic_write(outdir / "report.json", json.dumps(report, indent=2))
    _write_meta(outdir, cfg, "verify-theory")
    n_fail = sum(not r.passed for r in results)
    print(f"verify-theory: {len(results) - n_fail}/{len(results)} checks passed -> {outdir}")
    return EXIT_OK if n_fail == 0 else EXIT_THEORY


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="catapult-lab",
        description="Deterministic experiments on heavy-ball catapult dynamics",
    )
    parser.add_argument("command",
                        choices=["run", "sweep", "scenarios", "beta-sweep",
                                 "verify-theory"])
    parser.add_argument("--config", help="TOML or JSON config file")
    parser.add_argument("--out", help="output root (overrides config output_dir)")
    parser.add_argument("--threads", type=int, default=None,
                        help="parallel sweep cells (env CATAPULT_LAB_THREADS)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the dataset seed")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(Path(args.config)) if args.config else ExperimentConfig()
        if args.seed is not None:
            cfg = cfg.model_copy(deep=True)
            cfg.dataset.seed = args.seed
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("CATAPULT_LAB_THREADS", "1"))

    try:
        if args.command == "run":
            return cmd_run(cfg, args.out)
        if args.command == "scenarios":
            return cmd_scenarios(cfg, args.out)
        if args.command == "beta-sweep":
            return cmd_beta_sweep(cfg, args.out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, threads)
        return cmd_verify_theory(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
