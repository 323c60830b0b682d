import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracdir.errors import DivergenceError, InputError
from fracdir.fraclap import ScalarField, smooth_bump
from fracdir.geometry import Ball, BallComplement, HalfSpace, PartitionFamily
from fracdir.spaces import (HolderSpec, WeightSpec, dyadic_norm, weighted_holder,
                            weighted_lp_norm, weighted_sobolev_norm)


def _half_line_power(a):
    return ScalarField(lambda y: np.where((y[..., 0] > 0) & (y[..., 0] < 1),
                                          np.abs(y[..., 0]) ** a, 0.0),
                       support=((0.5,), 0.5), scale=0.5, smoothness="kink")


def test_strip_indicator_norm():
    hs = HalfSpace(1)
    r = weighted_lp_norm(_half_line_power(0.0), hs, "D", WeightSpec(2, 1.0))
    assert r.value == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("a,p,theta", [(0.3, 2.0, 1.0), (-0.2, 3.0, 1.5), (0.5, 1.5, 0.4)])
def test_power_law_closed_form(a, p, theta):
    r = weighted_lp_norm(_half_line_power(a), HalfSpace(1), "D", WeightSpec(p, theta))
    assert r.value ** p == pytest.approx(1 / (a * p + theta - 1 + 1), rel=1e-7)


def test_zero_field(ball):
    zero = ScalarField(lambda y: np.zeros(y.shape[:-1]))
    spec = WeightSpec(2, 0.5, 0.0, 1)
    assert weighted_sobolev_norm(zero, ball, "D", spec).value == 0
    assert dyadic_norm(zero, ball, "D", spec, PartitionFamily(ball)).value == 0


def test_constant_field_derivative_term_vanishes(ball):
    one = ScalarField(lambda y: np.ones(y.shape[:-1]), grad=lambda y: np.zeros(y.shape))
    r = weighted_sobolev_norm(one, ball, "D", WeightSpec(2, 1.0, 0.0, 1))
    by_order = {t["order"]: t["value"] for t in r.terms}
    assert by_order[1] == pytest.approx(0.0, abs=1e-12)
    assert r.value == pytest.approx(math.sqrt(2.0), rel=1e-8)


def test_divergence_flagged_below_window():
    a, p, d = 1.0, 2.0, 1
    u = ScalarField(lambda y: np.abs(y[..., 0]) ** (a / 2) * smooth_bump([0.0], 1.0)(y),
                    scale=0.3, smoothness="kink")
    hs = HalfSpace(1)
    ok = weighted_lp_norm(u, hs, "D", WeightSpec(p, d - 1 - a * p / 2 + 0.5))
    assert np.isfinite(ok.value)
    with pytest.raises(DivergenceError):
        weighted_lp_norm(u, hs, "D", WeightSpec(p, d - 1 - a * p / 2 - 0.5))


@given(st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3))
@settings(max_examples=10, deadline=None)
def test_homogeneity(lam):
    ball = Ball((0.0,), 1.0)
    u = smooth_bump([0.6], 0.3)
    v = ScalarField(lambda y: lam * u(y), support=u.support, scale=u.scale)
    spec = WeightSpec(2, 0.5, 0.0, 1)
    base = weighted_sobolev_norm(u, ball, "D", spec).value
    assert weighted_sobolev_norm(v, ball, "D", spec).value == pytest.approx(abs(lam) * base,
                                                                           rel=1e-12)


@pytest.mark.parametrize("n", [0, 1])
def test_dyadic_equivalent_to_direct(ball, n):
    spec = WeightSpec(2, 0.5, 0.0, n)
    ratios = []
    for e in (0.5, 0.05, 0.005):
        u = smooth_bump([1 - 0.55 * e], 0.45 * e)
        ratios.append(dyadic_norm(u, ball, "D", spec, PartitionFamily(ball)).value
                      / weighted_sobolev_norm(u, ball, "D", spec).value)
    assert max(ratios) / min(ratios) < 1.5
    assert 0.2 < min(ratios) and max(ratios) < 5


def test_partition_choice(ball):
    spec = WeightSpec(2, 0.5)
    u = smooth_bump([0.9], 0.08)
    a = dyadic_norm(u, ball, "D", spec, PartitionFamily(ball)).value
    b = dyadic_norm(u, ball, "D", spec, PartitionFamily(ball, 0.5, math.e ** 3)).value
    assert 0.2 < a / b < 5


def test_gappy_partition_rejected(ball):
    with pytest.raises(InputError):
        PartitionFamily(ball, 1.0, 2.0)


def test_sigma_monotone_on_exterior(ball):
    g = smooth_bump([30.0], 10.0)
    low = weighted_lp_norm(g, ball, "Dc", WeightSpec(2, 0.5, -1.0)).value
    high = weighted_lp_norm(g, ball, "Dc", WeightSpec(2, 0.5, 1.0)).value
    assert low <= high


def test_exterior_of_ball_complement():
    dom = BallComplement((0.0,), 1.0)
    u = smooth_bump([0.0], 0.5)
    assert weighted_lp_norm(u, dom, "Dc", WeightSpec(2, 1.0)).value == pytest.approx(
        math.sqrt(np.sum(u(np.linspace(-0.5, 0.5, 20001)[:, None]) ** 2) * 1e-1 / 2000), rel=1e-4)


def test_holder_power_law_growth():
    a, eps = 1.0, 0.1
    hs = HalfSpace(1)
    u = ScalarField(lambda y: np.abs(y[..., 0]) ** (a / 2 - eps), scale=0.1, growth=a / 2)
    s = np.geomspace(1e-1, 1e-6, 11)
    tame = weighted_holder(u, hs, HolderSpec(0, 0.5, -a / 2 + eps), s)
    wild = weighted_holder(u, hs, HolderSpec(0, 0.5, -a / 2), s)

    def slope(rep):
        d = np.array([r["d_x"] for r in rep.ladder])
        w = np.array([r["weighted"] for r in rep.ladder])
        return np.polyfit(np.log(d), np.log(w), 1)[0]

    assert abs(slope(tame)) < 0.02
    assert slope(wild) == pytest.approx(-eps, abs=0.02)


def test_holder_rejects_bad_delta():
    with pytest.raises(InputError):
        HolderSpec(0, 1.0)
