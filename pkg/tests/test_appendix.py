import math

import pytest
from hypothesis import given, settings, strategies as st

from fracdir.errors import ConfigError
from fracdir.geometry import Ball, HalfSpace
from fracdir.harness.appendix import (ball_average_power, check_ball_average_hypothesis,
                                      check_envelope_hypothesis, check_exterior_hypothesis,
                                      check_appendix_lemmas, exterior_power_exact,
                                      exterior_power_integral, transverse_integral)


@given(st.floats(-0.9, 1.0), st.floats(0.05, 1.0), st.floats(1e-4, 10.0))
@settings(max_examples=25, deadline=None)
def test_exterior_power_integral_closed_form(nu0, gap, dx):
    nu1 = nu0 + gap
    got = exterior_power_integral(nu0, nu1, dx)
    assert got == pytest.approx(exterior_power_exact(nu0, nu1, dx), rel=1e-8)


def test_ball_average_of_constant_is_one():
    assert ball_average_power(HalfSpace(1), 0.0, 0.3) == pytest.approx(1.0, rel=1e-10)
    assert ball_average_power(Ball((0.0, 0.0), 1.0), 0.0, 0.2) == pytest.approx(1.0, rel=1e-8)


def test_ball_average_half_line_power():
    # mean of |h|^lam over (-r, r) about the boundary point
    lam, r = 0.5, 0.4
    assert ball_average_power(HalfSpace(1), lam, r) == pytest.approx(r ** lam / (lam + 1), rel=1e-8)


def test_transverse_integral_far_field():
    # for x1 >= 1 the minimum is the kernel: int |x|^{-3} dy = 2 / x1^2 at alpha = 1
    assert transverse_integral(5.0, 1.0) == pytest.approx(2 / 25, rel=1e-8)


@pytest.mark.parametrize("call", [
    lambda: check_exterior_hypothesis(-1.2, 0.5),
    lambda: check_exterior_hypothesis(0.5, 0.5),
    lambda: check_envelope_hypothesis(1.0, -1.0, -1.5),
    lambda: check_envelope_hypothesis(1.0, 0.0, 2.0),
    lambda: check_ball_average_hypothesis(-1.0),
])
def test_hypothesis_guards(call):
    with pytest.raises(ConfigError):
        call()


def test_falsify_probes_are_reported_only():
    out = check_appendix_lemmas(Ball((0.0,), 1.0), falsify=True)
    probes = [c for c in out if c.name.startswith("falsify")]
    assert len(probes) == 4
    assert not any(c.asserted for c in probes)
    assert all(c.passed for c in out if c.asserted)
