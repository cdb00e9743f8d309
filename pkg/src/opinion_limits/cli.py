"""Experiment orchestration and the opinion-limits command line tool.

Each experiment resolves its configuration, derives per-run random
streams from the base seed, runs the requested protocol, and emits CSV
files plus a manifest.json from which the run can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .abm import run_abm
from .analysis import ensemble_stats, error_timeseries, quartile_summary, sweep_error
from .config import ConfigError, ExperimentConfig, config_from_dict, parse_config
from .dem import build_limit, integrate
from .limitcheck import SweepRow, convergence_sweep, probe_states, sweep_summary, write_sweep_csv
from .trajectory import Trajectory

__all__ = ["run_experiment", "main"]

# stream tags; a run r of a given purpose uses default_rng([base_seed, tag, r])
_TAG_ABM = 1
_TAG_DEM = 2
_TAG_LIMITCHECK = 3
_TAG_STATES = 4
_TAG_SWEEP = 5


def _dt_grid(horizon: float, dt: float) -> np.ndarray:
    return np.round(np.arange(int(round(horizon / dt)) + 1) * dt, 12)


def _write_series_csv(path, times, values, name="error"):
    with open(path, "w") as f:
        f.write(f"t,{name}\n")
        for t, v in zip(times, values):
            f.write(f"{t:.17g},{v:.17g}\n")


def _abm_realization(args):
    spec, x0, times, seed_key = args
    return run_abm(spec, x0, times, np.random.default_rng(seed_key)).values


def _dem_realization(args):
    spec, integrator, x0, horizon, times, seed_key = args
    model = build_limit(spec)
    return integrate(model, x0, integrator, horizon, times, np.random.default_rng(seed_key)).values


def _map_runs(fn, jobs, threads: int):
    if threads <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def _run_compare(cfg: ExperimentConfig, out: str, threads: int) -> None:
    spec = cfg.model_spec()
    model = build_limit(spec)
    integrator = cfg.integrator(model.has_diffusion)
    x0 = cfg.x0()
    times = _dt_grid(spec.horizon, integrator.dt)

    abm_traj = run_abm(spec, x0, times, np.random.default_rng([cfg.base_seed, _TAG_ABM, 0]))
    dem_traj = integrate(
        model, x0, integrator, spec.horizon, times,
        np.random.default_rng([cfg.base_seed, _TAG_DEM, 0]),
    )
    err = error_timeseries(abm_traj, dem_traj)

    abm_traj.to_csv(os.path.join(out, "abm.csv"))
    dem_traj.to_csv(os.path.join(out, "dem.csv"))
    _write_series_csv(os.path.join(out, "error.csv"), times, err)
    print(f"max Error(t) = {err.max():.6g}")


def _run_sweep_h(cfg: ExperimentConfig, out: str, threads: int) -> None:
    from dataclasses import replace

    spec = cfg.model_spec()
    model = build_limit(spec)
    if model.has_diffusion:
        raise ConfigError("sweep_h compares against a deterministic limit; noise must be off")
    integrator = cfg.integrator(False)
    x0 = cfg.x0()
    times = _dt_grid(spec.horizon, integrator.dt)
    dem_traj = integrate(model, x0, integrator, spec.horizon, times)

    runs_per_h = cfg.raw["experiment"]["runs_per_h"]
    rows = []
    for hi, h in enumerate(cfg.h_list):
        spec_h = replace(spec, h=float(h))
        jobs = [
            (spec_h, x0, times, [cfg.base_seed, _TAG_SWEEP, hi, r]) for r in range(runs_per_h)
        ]
        for r, values in enumerate(_map_runs(_abm_realization, jobs, threads)):
            traj = Trajectory(times, values)
            rows.append((h, r, sweep_error(traj, dem_traj, spec.horizon, cfg.error_norm)))
    with open(os.path.join(out, "errors.csv"), "w") as f:
        f.write("h,run,error\n")
        for h, r, e in rows:
            f.write(f"{h:.17g},{r},{e:.17g}\n")
    for h in cfg.h_list:
        summary = quartile_summary([e for hh, _, e in rows if hh == h])
        print(
            f"h={h:g}: mean={summary['mean']:.4g} median={summary['median']:.4g} "
            f"IQR=[{summary['q1']:.4g}, {summary['q3']:.4g}]"
        )


def _run_ensemble(cfg: ExperimentConfig, out: str, threads: int) -> None:
    spec = cfg.model_spec()
    model = build_limit(spec)
    integrator = cfg.integrator(model.has_diffusion)
    x0 = cfg.x0()
    times = _dt_grid(spec.horizon, integrator.dt)
    n_runs = cfg.raw["experiment"]["n_runs"]

    abm_jobs = [(spec, x0, times, [cfg.base_seed, _TAG_ABM, r]) for r in range(n_runs)]
    abm_runs = [
        Trajectory(times, v) for v in _map_runs(_abm_realization, abm_jobs, threads)
    ]
    dem_jobs = [
        (spec, integrator, x0, spec.horizon, times, [cfg.base_seed, _TAG_DEM, r])
        for r in range(n_runs)
    ]
    dem_runs = [
        Trajectory(times, v) for v in _map_runs(_dem_realization, dem_jobs, threads)
    ]

    abm_stats = ensemble_stats(abm_runs)
    dem_stats = ensemble_stats(dem_runs)
    abm_stats.write_csv(os.path.join(out, "abm_mean.csv"), os.path.join(out, "abm_var.csv"))
    dem_stats.write_csv(os.path.join(out, "dem_mean.csv"), os.path.join(out, "dem_var.csv"))
    mean_err = np.abs(abm_stats.mean - dem_stats.mean).sum(axis=1)
    var_err = np.abs(abm_stats.variance - dem_stats.variance).sum(axis=1)
    _write_series_csv(os.path.join(out, "mean_error.csv"), times, mean_err)
    _write_series_csv(os.path.join(out, "var_error.csv"), times, var_err)
    print(f"max mean-error = {mean_err.max():.6g}, max variance-error = {var_err.max():.6g}")


def _run_limitcheck(cfg: ExperimentConfig, out: str, threads: int) -> None:
    spec = cfg.model_spec()
    exp = cfg.raw["experiment"]
    states = probe_states(
        spec.n_agents, exp["n_states"], np.random.default_rng([cfg.base_seed, _TAG_STATES])
    )
    rng = np.random.default_rng([cfg.base_seed, _TAG_LIMITCHECK])
    h_list = sorted(cfg.h_list, reverse=True)
    per_h = {h: SweepRow(h, 0.0, 0.0, 0.0) for h in h_list}
    for x in states:
        for row in convergence_sweep(x, spec, h_list, exp["samples"], rng):
            prev = per_h[row.h]
            per_h[row.h] = SweepRow(
                h=row.h,
                b_deviation=max(prev.b_deviation, row.b_deviation),
                a_deviation=max(prev.a_deviation, row.a_deviation),
                gamma4=max(prev.gamma4, row.gamma4),
            )
    rows = [per_h[h] for h in h_list]
    write_sweep_csv(rows, os.path.join(out, "limitcheck.csv"))
    summary = sweep_summary(rows, b_tol=exp["b_tol"])
    with open(os.path.join(out, "summary.txt"), "w") as f:
        f.write(summary + "\n")
    print(summary)


_RUNNERS = {
    "compare": _run_compare,
    "sweep_h": _run_sweep_h,
    "ensemble": _run_ensemble,
    "limitcheck": _run_limitcheck,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> str:
    """Run the configured experiment; returns the output directory."""
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump({"config": cfg.to_dict()}, f, indent=2, sort_keys=True)
        f.write("\n")
    _RUNNERS[cfg.experiment](cfg, out, threads)
    return out


def _load_config(path: str, out_override: str | None, paper_scale: bool) -> ExperimentConfig:
    with open(path) as f:
        text = f.read()
    if path.endswith(".json"):
        data = json.loads(text)["config"]
        cfg = config_from_dict(data)
    else:
        cfg = parse_config(text)
    raw = cfg.to_dict()
    if out_override is not None:
        raw["experiment"]["output_dir"] = out_override
    if paper_scale:
        raw["experiment"]["n_runs"] = 5000
    return config_from_dict(raw)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="opinion-limits",
        description="Simulate opinion-dynamics agent models and their ODE/SDE limits",
    )
    parser.add_argument("config", help="experiment config file (INI) or a manifest.json")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument(
        "--paper-scale", action="store_true", help="use 5000 ensemble realizations"
    )
    parser.add_argument("--threads", type=int, default=1, help="worker processes for ensembles")
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args.config, args.out, args.paper_scale)
    except (ConfigError, OSError, KeyError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    try:
        run_experiment(cfg, threads=max(1, args.threads))
    except Exception as e:  # simulation failures map to a distinct exit code
        print(f"simulation error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
