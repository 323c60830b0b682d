import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracdir.errors import InputError, InsufficientRangeError
from fracdir.harness.ratio import (Check, RatioReport, RatioRow, exponent_check,
                                   fit_decay_exponent, loglog_fit)
from fracdir.kernels import StableParams
from fracdir.fraclap import PointMass
from fracdir.solvers import solve_elliptic_kernel

DX = np.geomspace(1e-6, 1e-1, 12)


@given(st.floats(-2, 2), st.floats(0.1, 100))
@settings(max_examples=30, deadline=None)
def test_exact_power_law(a, c):
    fit = fit_decay_exponent(np.column_stack([DX, c * DX ** a]))
    assert fit.slope == pytest.approx(a, abs=1e-6)
    slope, intercept, ci = fit
    assert intercept == pytest.approx(math.log(c), abs=1e-6)


def test_correction_term_fades():
    slopes = []
    for top in (1e-1, 1e-3, 1e-5):
        dx = np.geomspace(top * 1e-3, top, 10)
        slopes.append(fit_decay_exponent(np.column_stack([dx, dx ** 0.5 * (1 + dx)])).slope)
    assert abs(slopes[2] - 0.5) < abs(slopes[1] - 0.5) < abs(slopes[0] - 0.5)
    assert slopes[2] == pytest.approx(0.5, abs=1e-5)


def test_point_mass_solution_decay(ball):
    p = StableParams(1, 1.0)
    xs = 1 - DX
    v = solve_elliptic_kernel(ball, p, PointMass((3.0,)), xs[:, None]).value
    assert fit_decay_exponent(np.column_stack([DX, v])).slope == pytest.approx(0.5, abs=0.02)


def test_fit_errors():
    with pytest.raises(InputError):
        fit_decay_exponent(np.column_stack([DX, -DX]))
    with pytest.raises(InsufficientRangeError):
        fit_decay_exponent(np.column_stack([DX[:4], DX[:4]]))
    dx = np.geomspace(1e-2, 1e-1, 10)
    with pytest.raises(InsufficientRangeError):
        fit_decay_exponent(np.column_stack([dx, dx]))


def test_weighted_fit_ci_covers_truth():
    rng = np.random.default_rng(0)
    err = 0.01 * DX ** 0.3
    y = DX ** 0.3 + err * rng.standard_normal(DX.size)
    fit = loglog_fit(DX, y, err)
    assert fit.ci[0] <= 0.3 <= fit.ci[1]


def _rows(ratio_fn, xs=DX):
    return [RatioRow({"d_x": float(x)}, ratio_fn(x), 1.0) for x in xs]


def test_flat_report_and_constant():
    rep = RatioReport("flat", _rows(lambda x: 2.0 + 0 * x), "d_x", 0.02)
    assert rep.verdict == "pass"
    assert rep.C == pytest.approx(2.0)
    assert not RatioReport("grow", _rows(lambda x: x ** -0.1), "d_x", 0.02).passed


def test_no_growth_allows_decay_toward_end():
    shrink = _rows(lambda x: x ** 0.3)
    assert RatioReport("ng", shrink, "d_x", 0.02, mode="no-growth", ends=("low",)).passed
    grow = _rows(lambda x: x ** -0.1)
    assert not RatioReport("ng", grow, "d_x", 0.02, mode="no-growth", ends=("low",)).passed


def test_two_sided_checks_each_end():
    kink = _rows(lambda x: 1.0 if x < 1e-3 else (x / 1e-3) ** 0.2)
    assert not RatioReport("ts", kink, "d_x", 0.02, mode="two-sided").passed
    assert RatioReport("ts", kink, "d_x", 0.02, mode="two-sided", ends=("low",),
                       window_at={"low": 1e-3}).passed


def test_zero_lhs_rows_are_ignored():
    rows = _rows(lambda x: 1.0) + [RatioRow({"d_x": 0.5}, 0.0, 1.0)]
    rep = RatioReport("z", rows, "d_x", 0.02)
    assert rep.passed
    assert rep.fit.n == len(DX)


def test_invalid_reports():
    with pytest.raises(InputError):
        RatioReport("e", [], "d_x", 0.02)
    with pytest.raises(InputError):
        RatioReport("r", [RatioRow({"d_x": 1.0}, 1.0, 0.0)], "d_x", 0.02)
    with pytest.raises(InputError):
        RatioReport("m", _rows(lambda x: 1.0), "d_x", 0.02, mode="sideways")
    with pytest.raises(InputError):
        Check("c", "maybe", {})


def test_stochastic_inconclusive_when_ci_wide():
    rows = [RatioRow({"d_x": float(x)}, 1.0, 1.0, 0.5) for x in DX[:4]]
    rep = RatioReport("s", rows, "d_x", 0.02, stochastic=True)
    assert rep.verdict == "inconclusive"


def test_exponent_check():
    ok = exponent_check("e", DX, DX ** 0.75, 0.75, 0.02)
    assert ok.passed and len(ok.rows) == DX.size
    assert not exponent_check("e", DX, DX ** 0.8, 0.75, 0.02).passed


def test_covariates_remove_shape_confounding():
    rng = np.random.default_rng(3)
    d = np.geomspace(1e-3, 1, 20)
    shape = np.where(d < 0.03, rng.uniform(0.6, 0.9, 20), rng.uniform(0.1, 0.4, 20))
    rows = [RatioRow({"d": float(a), "q": float(b)}, float(b ** 0.5), 1.0) for a, b in zip(d, shape)]
    assert not RatioReport("raw", rows, "d", 0.02).passed
    rep = RatioReport("adj", rows, "d", 0.02, covariates=("q",))
    assert rep.passed
    assert rep.fit.slope == pytest.approx(0.0, abs=1e-10)
