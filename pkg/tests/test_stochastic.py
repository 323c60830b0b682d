import math

import numpy as np
import pytest
from scipy import stats

from fracdir.errors import DomainError, InputError
from fracdir.geometry import Ball, HalfSpace
from fracdir.kernels import StableParams, exit_cdf_1d, mean_exit_time_ball
from fracdir.stochastic import (McConfig, RngStream, ball_exit_sample, killed_path,
                                killed_paths_mc, sample_increment, walk_on_spheres,
                                walk_on_spheres_mc)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("xi", [0.5, 1.0, 2.0])
def test_characteristic_function(alpha, xi):
    x = sample_increment(StableParams(1, alpha), 1.0, RngStream(11).generator(), size=10 ** 6)
    emp = np.mean(np.cos(xi * x[:, 0]))
    assert abs(emp - math.exp(-xi ** alpha)) < 3 / math.sqrt(10 ** 6)


def test_characteristic_function_2d():
    x = sample_increment(StableParams(2, 1.2), 1.0, RngStream(5).generator(), size=400_000)
    xi = np.array([0.6, -0.8])
    emp = np.mean(np.cos(x @ xi))
    assert abs(emp - math.exp(-1.0)) < 4 / math.sqrt(400_000)


@pytest.mark.parametrize("alpha", [0.7, 1.6])
def test_self_similarity(alpha):
    p = StableParams(1, alpha)
    t = 3.7
    a = sample_increment(p, t, RngStream(1).generator(), size=100_000)[:, 0] / t ** (1 / alpha)
    b = sample_increment(p, 1.0, RngStream(2).generator(), size=100_000)[:, 0]
    assert stats.ks_2samp(a, b).statistic < 0.01


def test_increment_rejects_nonpositive_time(rng):
    with pytest.raises(InputError):
        sample_increment(StableParams(1, 1.0), 0.0, rng)


@pytest.mark.parametrize("x", [0.0, 0.6])
def test_ball_exit_law(ball, x):
    p = StableParams(1, 1.3)
    z = ball_exit_sample(ball, p, [x], RngStream(3).generator(), size=50_000)[:, 0]
    assert np.all(np.abs(z) >= 1)
    ks = stats.kstest(z, lambda s: exit_cdf_1d(ball, p, x, s)).statistic
    assert ks < 0.01


def test_ball_exit_2d_lands_outside():
    b = Ball((0.0, 0.0), 2.0)
    z = ball_exit_sample(b, StableParams(2, 1.0), [0.5, 0.5], RngStream(4).generator(), size=2000)
    assert np.all(np.linalg.norm(z, axis=1) >= 2.0)


def test_exterior_start_rejected(ball, rng):
    p = StableParams(1, 1.0)
    with pytest.raises(DomainError):
        ball_exit_sample(ball, p, [1.5], rng)
    with pytest.raises(DomainError):
        walk_on_spheres(HalfSpace(1), p, [-0.1], rng)
    with pytest.raises(DomainError):
        killed_path(ball, p, [1.0], 0.01, 1.0, rng)


def test_determinism_across_workers_and_runs(ball):
    p = StableParams(1, 0.8)
    mc = McConfig(paths=3000, seed=9, chunk=700, workers=1)
    a = walk_on_spheres_mc(ball, p, [0.2], mc)
    b = walk_on_spheres_mc(ball, p, [0.2], McConfig(3000, 9, chunk=700, workers=3))
    c = walk_on_spheres_mc(ball, p, [0.2], mc)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.positions, c.positions)
    other = walk_on_spheres_mc(ball, p, [0.2], McConfig(3000, 10, chunk=700, workers=1))
    assert not np.array_equal(a.positions, other.positions)


def test_wos_censoring_is_recorded(rng):
    batch = walk_on_spheres(HalfSpace(1), StableParams(1, 1.9), [1.0], rng, max_steps=1, size=500)
    assert len(batch) == 500
    assert 0 < batch.censored_fraction < 1


def test_killed_path_horizon_below_step(ball, rng):
    rec = killed_path(ball, StableParams(1, 1.0), [0.0], dt=0.5, horizon=0.1, rng=rng)
    assert not rec.exited
    assert rec.time is None
    assert rec.steps == 0


def test_killed_path_mean_exit_time(ball):
    p = StableParams(1, 1.0)
    b = killed_paths_mc(ball, p, [0.0], McConfig(40_000, 1, dt=2 ** -8, workers=1), horizon=40.0)
    assert b.censored_fraction == 0
    se = np.std(b.times) / math.sqrt(len(b))
    exact = float(mean_exit_time_ball(ball, p, [0.0]))
    # exit is detected on the grid, so the estimate sits slightly above the truth
    assert exact - 3 * se < np.mean(b.times) < exact + 3 * se + 0.05


def test_killed_path_needs_dt(ball):
    with pytest.raises(InputError):
        killed_paths_mc(ball, StableParams(1, 1.0), [0.0], McConfig(10), horizon=1.0)


def test_mc_config_validation():
    with pytest.raises(InputError):
        McConfig(paths=0)
    with pytest.raises(InputError):
        McConfig(dt=-1.0)
