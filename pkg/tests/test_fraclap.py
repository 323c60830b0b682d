import math

import numpy as np
import pytest
from scipy.special import zeta
from hypothesis import given, settings, strategies as st

from fracdir.errors import DomainError, InputError
from fracdir.fraclap import (PairingSpec, PointMass, ScalarField, distributional_pairing,
                             fraclap_field, fraclap_fourier, fraclap_outside_support, fraclap_pv,
                             smooth_bump)
from fracdir.geometry import Ball
from fracdir.kernels import StableParams
from fracdir.quadrature import panel_rule
from fracdir.solvers import ClosedForm, elliptic_field


@given(st.sampled_from([0.5, 1.0, 2.0]), st.floats(-2.0, 2.0), st.sampled_from([0.5, 1.0, 1.5]))
@settings(max_examples=20, deadline=None)
def test_plane_wave_symbol(xi, x, a):
    p = StableParams(1, a)
    u = ScalarField(lambda y: np.cos(xi * y[..., 0]), scale=1.0 / xi)
    got = fraclap_pv(u, p, x).value
    want = -abs(xi) ** a * math.cos(xi * x)
    assert got == pytest.approx(want, rel=1e-6, abs=1e-6 * abs(xi) ** a)


def test_constant_is_harmonic():
    u = ScalarField(lambda y: np.full(y.shape[:-1], 3.0), far_mean=3.0)
    assert fraclap_pv(u, StableParams(1, 1.2), 0.4).value == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("x", [0.0, 0.3, -0.7])
def test_torsion_profile_has_constant_laplacian(x):
    # Delta^{1/2} (1 - x^2)_+^{1/2} = -1 on (-1, 1)
    u = ScalarField(lambda y: np.sqrt(np.clip(1 - y[..., 0] ** 2, 0, None)),
                    support=((0.0,), 1.0), scale=0.5,
                    kinks=lambda x0, w: [r for r in (1 - x0[0] * w[0], -1 - x0[0] * w[0]) if r > 0])
    assert fraclap_pv(u, StableParams(1, 1.0), x, rtol=1e-5).value == pytest.approx(-1.0, rel=1e-5)


@pytest.mark.parametrize("width", [0.5, 1.0])
def test_fourier_matches_pv_on_gaussian(width):
    p = StableParams(1, 1.5)
    n, L = 4096, 40.0
    grid = -L / 2 + L * np.arange(n) / n
    a = 1.0 / width ** 2
    spec = fraclap_fourier(np.exp(-a * grid ** 2), p, L)[n // 2]
    u = ScalarField(lambda y: np.exp(-a * y[..., 0] ** 2), scale=0.5 * width)
    pv = fraclap_pv(u, p, 0.0).value
    # periodic images at distance kL add c_d * mass * 2 zeta(1 + alpha) / L^(1 + alpha)
    images = p.c_d * math.sqrt(math.pi / a) * 2 * zeta(2.5) / L ** 2.5
    assert spec - images == pytest.approx(pv, abs=1e-6)
    if width <= 0.5:
        assert spec == pytest.approx(pv, abs=1e-4)


def test_fourier_zero_field():
    out = fraclap_fourier(np.zeros(64), StableParams(1, 1.0), 10.0)
    assert np.all(out == 0)


def test_fourier_rejects_field_touching_boundary():
    with pytest.raises(InputError):
        fraclap_fourier(np.ones(64), StableParams(1, 1.0), 10.0)


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5])
def test_fraclap_field_off_support_is_kernel_integral(a):
    p = StableParams(1, a)
    phi = smooth_bump([0.2], 0.3)
    y, w = panel_rule(np.linspace(-0.1, 0.5, 41), 12)
    direct = p.c_d * np.sum(phi(y[:, None]) * w * np.abs(y - 2.0) ** (-1 - a))
    assert fraclap_outside_support(phi, p, [2.0])[0] == pytest.approx(direct, rel=1e-10)
    lap = fraclap_field(phi, p)
    assert lap(np.array([[2.0]]))[0] == pytest.approx(direct, rel=1e-10)


def test_point_mass_pairing(ball):
    p = StableParams(1, 1.0)
    phi = smooth_bump([0.1], 0.3)
    zero = lambda y: np.zeros(np.shape(y)[:-1])
    res = distributional_pairing(PairingSpec(ball, zero, PointMass((1.5,), 1.0), phi), p)
    y, w = panel_rule(np.linspace(-0.2, 0.4, 41), 12)
    want = p.c_d * np.sum(phi(y[:, None]) * w * np.abs(y - 1.5) ** (-2.0))
    assert res.value == pytest.approx(want, rel=1e-9)


def test_constant_pairing_vanishes(ball):
    p = StableParams(1, 0.7)
    one = ScalarField(lambda y: np.ones(y.shape[:-1]))
    res = distributional_pairing(PairingSpec(ball, one, one, smooth_bump([-0.3], 0.4)), p)
    assert abs(res.value) < 1e-5 * res.scale


def test_solved_field_pairing_vanishes(ball):
    p = StableParams(1, 1.0)
    g = ClosedForm(smooth_bump([2.0], 0.6))
    u = elliptic_field(ball, p, g)
    res = distributional_pairing(PairingSpec(ball, u, g, smooth_bump([0.2], 0.3)), p)
    assert abs(res.value) < 1e-3 * res.scale


def test_pairing_rejects_test_function_touching_boundary(ball):
    zero = lambda y: np.zeros(np.shape(y)[:-1])
    with pytest.raises(DomainError):
        distributional_pairing(PairingSpec(ball, zero, PointMass((2.0,)), smooth_bump([0.8], 0.3)),
                               StableParams(1, 1.0))
