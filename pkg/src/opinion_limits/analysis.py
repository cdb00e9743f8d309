"""Trajectory comparison metrics and ensemble statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .abm import ModelSpec, run_abm
from .trajectory import Trajectory

__all__ = [
    "EnsembleStats",
    "error_timeseries",
    "sweep_error",
    "ensemble_stats",
    "error_distribution",
]


@dataclass(frozen=True)
class EnsembleStats:
    """Per-agent mean and variance across realizations, over time."""

    sample_times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    n_realizations: int

    def write_csv(self, mean_path, var_path) -> None:
        Trajectory(self.sample_times, self.mean).to_csv(mean_path)
        Trajectory(self.sample_times, self.variance).to_csv(var_path)


def _check_grids(x: Trajectory, y: Trajectory) -> None:
    if x.values.shape != y.values.shape or not np.array_equal(x.sample_times, y.sample_times):
        raise ValueError("trajectories must share sample times and population size")


def error_timeseries(x: Trajectory, y: Trajectory) -> np.ndarray:
    """Per-time L1 distance across agents."""
    _check_grids(x, y)
    return np.abs(x.values - y.values).sum(axis=1)


def sweep_error(
    abm_traj: Trajectory, dem_traj: Trajectory, duration: float, norm: str = "duration"
) -> float:
    """Frobenius norm of the trajectory difference, divided by T.

    norm='samples' divides by the number of sample times instead.
    """
    _check_grids(abm_traj, dem_traj)
    fro = float(np.linalg.norm(abm_traj.values - dem_traj.values))
    if norm == "duration":
        return fro / duration
    if norm == "samples":
        return fro / len(abm_traj.sample_times)
    raise ValueError(f"unknown error norm {norm!r}")


def ensemble_stats(runs: Sequence[Trajectory]) -> EnsembleStats:
    """Sample mean and unbiased variance per (time, agent)."""
    if len(runs) < 2:
        raise ValueError("need at least 2 realizations")
    first = runs[0]
    for r in runs[1:]:
        _check_grids(first, r)
    stack = np.stack([r.values for r in runs])
    return EnsembleStats(
        sample_times=first.sample_times,
        mean=stack.mean(axis=0),
        variance=stack.var(axis=0, ddof=1),
        n_realizations=len(runs),
    )


def error_distribution(
    spec: ModelSpec,
    dem_traj: Trajectory,
    x0: Sequence[float],
    n_runs: int,
    base_seed: int,
    norm: str = "duration",
) -> list[float]:
    """Sweep error of n_runs independent ABM realizations vs one DEM run."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    errors = []
    for r in range(n_runs):
        rng = np.random.default_rng([base_seed, r])
        traj = run_abm(spec, x0, dem_traj.sample_times, rng)
        errors.append(sweep_error(traj, dem_traj, spec.horizon, norm))
    return errors


def quartile_summary(errors: Sequence[float]) -> dict[str, float]:
    """Mean and quartiles of an error sample, for violin-style reporting."""
    arr = np.asarray(errors, dtype=float)
    q1, q2, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "mean": float(arr.mean()),
        "q1": float(q1),
        "median": float(q2),
        "q3": float(q3),
    }
