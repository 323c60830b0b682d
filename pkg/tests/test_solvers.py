import math

import numpy as np
import pytest

from fracdir.errors import DomainError, InputError
from fracdir.fraclap import PointMass, ScalarField, fraclap_pv, smooth_bump
from fracdir.geometry import Ball, HalfSpace
from fracdir.kernels import StableParams, mean_exit_time_ball, poisson_kernel
from fracdir.solvers import (ClosedForm, TimeDependent, elliptic_field, green_potential_ball,
                             parabolic_exit_cdf, solve_elliptic_kernel, solve_elliptic_mc,
                             solve_parabolic_mc)
from fracdir.stochastic import McConfig

ONE = ClosedForm(ScalarField(lambda y: np.ones(y.shape[:-1]), far_mean=1.0))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_constant_data_gives_one(ball, alpha):
    xs = np.array([[0.0], [0.5], [-0.99], [0.9999]])
    est = solve_elliptic_kernel(ball, StableParams(1, alpha), ONE, xs)
    assert np.allclose(est.value, 1.0, atol=1e-6)


def test_constant_data_half_line():
    est = solve_elliptic_kernel(HalfSpace(1), StableParams(1, 0.8), ONE, [[0.01], [3.0]])
    assert np.allclose(est.value, 1.0, atol=1e-6)


def test_point_mass_is_kernel(ball):
    p = StableParams(1, 1.2)
    est = solve_elliptic_kernel(ball, p, PointMass((2.0,), 3.0), [[0.1]])
    assert est.value == pytest.approx(3.0 * float(poisson_kernel(ball, p, [0.1], [2.0])))


def test_point_mass_must_be_exterior(ball):
    with pytest.raises(DomainError):
        solve_elliptic_kernel(ball, StableParams(1, 1.0), PointMass((0.5,)), [[0.1]])


def test_mc_constant_data(ball):
    est = solve_elliptic_mc(ball, StableParams(1, 1.0), ONE, None, [0.3],
                            McConfig(5000, 1, workers=1))
    assert est.value == 1.0


@pytest.mark.parametrize("alpha", [0.7, 1.4])
def test_mc_matches_quadrature(ball, alpha):
    p = StableParams(1, alpha)
    g = ClosedForm(smooth_bump([1.8], 0.6))
    xs = np.linspace(-0.9, 0.9, 10)
    quad = np.atleast_1d(solve_elliptic_kernel(ball, p, g, xs[:, None]).value)
    for i, x in enumerate(xs):
        est = solve_elliptic_mc(ball, p, g, None, [x], McConfig(40_000, 7 + i, workers=1))
        assert abs(est.value - quad[i]) < max(3 * est.error, 0.01 * abs(quad[i]))


def test_mc_source_gives_mean_exit_time(ball):
    p = StableParams(1, 1.0)
    one = ScalarField(lambda y: np.ones(y.shape[:-1]))
    est = solve_elliptic_mc(ball, p, None, one, [0.0], McConfig(40_000, 3, dt=2 ** -8, workers=1))
    exact = float(mean_exit_time_ball(ball, p, [0.0]))
    # u = -E int f: the source enters with a minus sign; grid monitoring adds O(dt)
    assert exact - 3 * est.error < -est.value < exact + 3 * est.error + 0.05


def test_mc_rejects_point_mass(ball):
    with pytest.raises(InputError):
        solve_elliptic_mc(ball, StableParams(1, 1.0), PointMass((2.0,)), None, [0.0], McConfig(10))


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.7])
def test_green_of_constant_is_mean_exit_time(ball, alpha):
    p = StableParams(1, alpha)
    one = ScalarField(lambda y: np.ones(y.shape[:-1]), support=((0.0,), 1.0))
    for x in (0.0, 0.7):
        v = green_potential_ball(ball, p, one, [[x]]).value
        assert v == pytest.approx(float(mean_exit_time_ball(ball, p, [x])), rel=1e-6)


def test_green_of_odd_source_vanishes_at_center(ball):
    f = ScalarField(lambda y: np.sin(3 * y[..., 0]), support=((0.0,), 1.0), scale=0.2)
    assert abs(green_potential_ball(ball, StableParams(1, 1.3), f, [[0.0]]).value) < 1e-10


@pytest.mark.parametrize("x", [-0.2, 0.0, 0.25])
def test_green_sign_convention(ball, x):
    # the Green potential solves Delta^{alpha/2} v = -f in the ball
    p = StableParams(1, 1.0)
    f = smooth_bump([0.0], 0.5)
    u = elliptic_field(ball, p, None, f)
    lap = fraclap_pv(u.interior_field(), p, x, rtol=1e-6).value
    assert lap == pytest.approx(f([x]).item(), rel=0.02)


def test_exterior_trace_and_linearity(ball):
    p = StableParams(1, 0.9)
    b1, b2 = smooth_bump([1.6], 0.4), smooth_bump([-2.5], 1.0)
    u1 = elliptic_field(ball, p, ClosedForm(b1))
    u2 = elliptic_field(ball, p, ClosedForm(b2))
    mix = ScalarField(lambda y: 2 * b1(y) - 0.5 * b2(y), scale=0.4)
    um = elliptic_field(ball, p, ClosedForm(mix))
    xs = np.array([[-0.8], [0.0], [0.6], [1.6], [-2.5]])
    e1, e2, em = u1.evaluate(xs), u2.evaluate(xs), um.evaluate(xs)
    tol = em.error + 2 * e1.error + 0.5 * e2.error
    assert np.all(np.abs(em.value - (2 * e1.value - 0.5 * e2.value)) <= tol)
    assert u1(xs[3:]) == pytest.approx(b1(xs[3:]))


def test_positivity(ball):
    u = elliptic_field(ball, StableParams(1, 1.5), ClosedForm(smooth_bump([5.0], 0.5)))
    assert np.all(u(np.linspace(-0.99, 0.99, 21)[:, None]) > 0)


def test_parabolic_zero_data(ball):
    zero = TimeDependent(lambda s, z: np.zeros(np.shape(s)), 0.0)
    est = solve_parabolic_mc(ball, StableParams(1, 1.0), zero, [0.0, 0.5, 2.0], [0.0],
                             McConfig(2000, 1, dt=0.01, workers=1))
    assert np.all(est.value == 0)


def test_parabolic_cdf_monotone(ball):
    ts = np.array([0.0, 0.05, 0.2, 0.5, 1.0, 3.0])
    est = parabolic_exit_cdf(ball, StableParams(1, 1.0), ts, [0.0],
                             McConfig(20_000, 2, dt=2 ** -7, workers=1))
    v = np.asarray(est.value)
    assert v[0] == 0
    assert np.all(np.diff(v) >= 0)
    assert v[-1] > 0.9


def test_parabolic_rejects_point_mass(ball):
    with pytest.raises(InputError):
        solve_parabolic_mc(ball, StableParams(1, 1.0), PointMass((2.0,)), 1.0, [0.0],
                           McConfig(10, dt=0.1))
