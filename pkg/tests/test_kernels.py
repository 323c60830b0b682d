import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracdir.errors import InputError
from fracdir.geometry import Ball, HalfSpace
from fracdir.kernels import (KernelBoundEnvelope, StableParams, envelope_value, exit_cdf_1d,
                             free_heat_kernel, green_function_ball, heat_kernel_bound,
                             mean_exit_time_ball, poisson_kernel, qd_estimate_mc, r_factor)
from fracdir.quadrature import shell_integrate
from fracdir.stochastic import McConfig, walk_on_spheres_mc


def test_params_validation():
    with pytest.raises(InputError):
        StableParams(1, 2.0)
    with pytest.raises(InputError):
        StableParams(0, 1.0)


def test_c_d_one_dimensional_cauchy():
    assert StableParams(1, 1.0).c_d == pytest.approx(1 / math.pi)


def test_cauchy_heat_kernel():
    p = StableParams(1, 1.0)
    assert free_heat_kernel(p, 1.0, [0.0]) == pytest.approx(1 / math.pi, rel=1e-10)
    for x in (0.3, 2.0, 50.0):
        assert free_heat_kernel(p, 1.0, [x]) == pytest.approx(1 / (math.pi * (1 + x * x)), rel=1e-9)


@given(st.floats(0.05, 20.0), st.floats(0.0, 30.0), st.sampled_from([0.5, 1.0, 1.5]))
@settings(max_examples=40, deadline=None)
def test_heat_kernel_self_similar(t, x, a):
    p = StableParams(1, a)
    lhs = free_heat_kernel(p, t, [x])
    rhs = t ** (-1 / a) * free_heat_kernel(p, 1.0, [x / t ** (1 / a)])
    assert lhs == pytest.approx(rhs, rel=1e-8)


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5])
def test_heat_kernel_mass_one(a):
    p = StableParams(1, a)
    res = shell_integrate(lambda r: 2 * np.array([free_heat_kernel(p, 1.0, [v]) for v in r]),
                          0.0, math.inf, rtol=1e-9)
    assert res.value == pytest.approx(1.0, abs=1e-4)


def test_heat_kernel_within_two_sided_bound():
    p = StableParams(2, 1.5)
    r = np.geomspace(1e-3, 1e3, 25)
    vals = np.array([free_heat_kernel(p, 1.0, [v, 0.0]) for v in r])
    ratio = vals / heat_kernel_bound(p, 1.0, np.column_stack([r, 0 * r]))
    assert ratio.max() / ratio.min() < 20


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5])
def test_exit_cdf_is_a_distribution(ball, a):
    p = StableParams(1, a)
    z = np.array([-1e9, -1.0, 1.0, 1e9])
    F = exit_cdf_1d(ball, p, 0.3, z)
    assert F[0] == pytest.approx(0.0, abs=1e-3)
    assert F[-1] == pytest.approx(1.0, abs=1e-3)
    assert F[1] == pytest.approx(F[2])  # no mass inside the ball


def test_ball_kernel_rotation_invariant():
    b = Ball((0.0, 0.0), 1.0)
    p = StableParams(2, 1.0)
    z = 1.7 * np.array([[1.0, 0.0], [0.0, 1.0], [math.sqrt(0.5), -math.sqrt(0.5)]])
    k = poisson_kernel(b, p, np.zeros((3, 2)), z)
    assert np.allclose(k, k[0], rtol=1e-12)


def test_half_line_kernel_against_walk_histogram(half_line):
    p = StableParams(1, 1.0)
    batch = walk_on_spheres_mc(half_line, p, [0.5], McConfig(200_000, seed=4))
    z = batch.positions[batch.exited][:, 0]
    h = 0.05
    frac = np.mean((z > -0.5 - h) & (z < -0.5 + h))
    se = math.sqrt(frac * (1 - frac) / z.size)
    nodes = np.linspace(-0.5 - h, -0.5 + h, 201)
    dens = poisson_kernel(half_line, p, np.full((nodes.size, 1), 0.5), nodes[:, None])
    exact = np.trapezoid(dens, nodes)
    assert abs(frac - exact) < 3 * se
    F = exit_cdf_1d(half_line, p, 0.5, np.array([-0.5 - h, -0.5 + h]))
    assert F[1] - F[0] == pytest.approx(exact, rel=1e-4)


@given(st.floats(-0.95, 0.95), st.floats(-0.95, 0.95))
@settings(max_examples=40, deadline=None)
def test_green_symmetric(x, y):
    b = Ball((0.0,), 1.0)
    p = StableParams(1, 1.5)
    if abs(x - y) < 1e-6:
        return
    assert green_function_ball(b, p, [[x]], [[y]]) == pytest.approx(
        green_function_ball(b, p, [[y]], [[x]]), rel=1e-10)


def test_green_singularity_exponent_2d():
    b = Ball((0.0, 0.0), 1.0)
    p = StableParams(2, 1.0)
    r = np.geomspace(1e-6, 1e-3, 10)
    y = np.column_stack([r, 0 * r])
    g = green_function_ball(b, p, np.zeros_like(y), y)
    slope = np.polyfit(np.log(r), np.log(g), 1)[0]
    assert slope == pytest.approx(p.alpha - p.d, abs=0.05)


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5])
def test_mean_exit_time_is_green_integral(ball, a):
    p = StableParams(1, a)
    G = lambda y: green_function_ball(ball, p, np.zeros((y.size, 1)), y[:, None])
    # graded toward the pole at 0 and toward the boundary zero at 1
    half = shell_integrate(G, 0.0, 0.5).value + shell_integrate(lambda u: G(1 - u), 0.0, 0.5).value
    total = 2 * half
    assert total == pytest.approx(mean_exit_time_ball(ball, p, [[0.0]]), rel=1e-6)


def test_kd_half_envelope_value():
    env = KernelBoundEnvelope("KD-half", StableParams(1, 1.0), HalfSpace(1))
    v = envelope_value(env, None, [[0.01]], [[-1.0]])
    assert float(np.ravel(v)[0]) == pytest.approx(0.01 ** 0.5 / 1.01, rel=1e-12)


def test_r_factor_one_at_natural_time():
    p = StableParams(1, 1.3)
    d = np.geomspace(1e-4, 1.0, 9)
    assert np.allclose(r_factor(p, d, d ** p.alpha), 1.0)


def test_qd_small_time_limit_is_jump_kernel(ball):
    # Q_D(t, x, z) -> c_d |x - z|^{-d-alpha} as t -> 0: the path still sits at x
    p = StableParams(1, 1.0)
    est = qd_estimate_mc(ball, p, 1e-4, [0.0], [1.5], McConfig(20_000, seed=2, dt=1e-5),
                         min_survivors=1)
    want = p.c_d * 1.5 ** -2
    assert float(np.ravel(est.value)[0]) == pytest.approx(want, rel=0.02)
