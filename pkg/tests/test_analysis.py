import math

import numpy as np
import pytest

from opinion_limits.abm import ModelSpec
from opinion_limits.analysis import (
    ensemble_stats,
    error_distribution,
    error_timeseries,
    quartile_summary,
    sweep_error,
)
from opinion_limits.kernel import Constant
from opinion_limits.trajectory import Trajectory


def traj(values, times=None):
    values = np.asarray(values, dtype=float)
    if times is None:
        times = np.arange(len(values), dtype=float)
    return Trajectory(np.asarray(times, dtype=float), values)


def test_error_timeseries_hand_value():
    a = traj([[0.0, 0.0], [1.0, 1.0]])
    b = traj([[0.5, 0.0], [0.0, 3.0]])
    assert error_timeseries(a, b) == pytest.approx([0.5, 3.0])


def test_error_timeseries_requires_same_grid():
    a = traj([[0.0], [1.0]])
    b = traj([[0.0], [1.0]], times=[0.0, 2.0])
    with pytest.raises(ValueError):
        error_timeseries(a, b)


def test_sweep_error_hand_value():
    a = traj([[0.0, 0.0], [0.0, 0.0]])
    b = traj([[3.0, 0.0], [0.0, 4.0]])
    assert sweep_error(a, b, duration=2.0) == pytest.approx(2.5)
    assert sweep_error(a, b, duration=2.0, norm="samples") == pytest.approx(2.5)
    with pytest.raises(ValueError):
        sweep_error(a, b, duration=2.0, norm="bogus")


def test_sweep_error_zero_for_identical():
    a = traj(np.random.default_rng(0).uniform(-1, 1, (5, 3)))
    assert sweep_error(a, a, duration=1.0) == 0.0


def test_ensemble_stats_hand_values():
    runs = [traj([[0.0, 2.0]]), traj([[2.0, 4.0]]), traj([[4.0, 6.0]])]
    stats = ensemble_stats(runs)
    np.testing.assert_allclose(stats.mean, [[2.0, 4.0]])
    np.testing.assert_allclose(stats.variance, [[4.0, 4.0]])  # unbiased, ddof=1
    assert stats.n_realizations == 3


def test_ensemble_stats_requires_two_runs():
    with pytest.raises(ValueError):
        ensemble_stats([traj([[0.0]])])


def test_ensemble_stats_gaussian_sample():
    rng = np.random.default_rng(1)
    runs = [traj(rng.normal(0.5, 2.0, (4, 3))) for _ in range(2000)]
    stats = ensemble_stats(runs)
    se_mean = 2.0 / math.sqrt(2000)
    assert np.all(np.abs(stats.mean - 0.5) <= 4 * se_mean)
    se_var = 4.0 * math.sqrt(2.0 / 1999)
    assert np.all(np.abs(stats.variance - 4.0) <= 4 * se_var)


def test_ensemble_csv_written(tmp_path):
    runs = [traj([[0.0, 2.0]], times=[0.0]), traj([[2.0, 4.0]], times=[0.0])]
    stats = ensemble_stats(runs)
    mean_path = tmp_path / "mean.csv"
    var_path = tmp_path / "var.csv"
    stats.write_csv(mean_path, var_path)
    mean_back = Trajectory.from_csv(mean_path)
    assert np.array_equal(mean_back.values, stats.mean)
    var_back = Trajectory.from_csv(var_path)
    assert np.array_equal(var_back.values, stats.variance)


def test_error_distribution_deterministic_and_positive():
    spec = ModelSpec(n_agents=4, h=1e-3, horizon=1.0, kernel=Constant(1.0))
    x0 = np.array([-0.5, -0.1, 0.2, 0.8])
    dem = traj(np.tile(x0, (3, 1)), times=[0.0, 0.5, 1.0])  # frozen reference
    a = error_distribution(spec, dem, x0, n_runs=5, base_seed=7)
    b = error_distribution(spec, dem, x0, n_runs=5, base_seed=7)
    assert a == b
    assert all(e > 0 for e in a)  # the chain contracts away from the frozen reference
    with pytest.raises(ValueError):
        error_distribution(spec, dem, x0, n_runs=0, base_seed=7)


def test_quartile_summary_hand_values():
    s = quartile_summary([1.0, 2.0, 3.0, 4.0, 5.0])
    assert s["median"] == 3.0
    assert s["q1"] == 2.0
    assert s["q3"] == 4.0
    assert s["mean"] == 3.0
