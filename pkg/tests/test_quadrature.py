import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracdir.quadrature import graded_edges, panel_rule, shell_integrate


@given(st.integers(0, 19))
def test_panel_rule_exact_for_polynomials(k):
    x, w = panel_rule([0.0, 0.3, 1.0], order=10)
    assert np.sum(w * x ** k) == pytest.approx(1 / (k + 1), rel=1e-13)


def test_graded_edges_accumulate_at_endpoint():
    e = graded_edges(0.0, 1.0, toward="a", levels=20)
    assert e[0] == 0.0 and e[-1] == 1.0
    assert np.all(np.diff(e) > 0)
    assert e[1] < 1e-5


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.7])
def test_shell_integrate_endpoint_singularity(a):
    res = shell_integrate(lambda s: s ** a, 0.0, 1.0)
    assert res.value == pytest.approx(1 / (a + 1), rel=1e-10)


@pytest.mark.parametrize("b", [1.5, 2.0, 3.5])
def test_shell_integrate_infinite_tail(b):
    res = shell_integrate(lambda s: (1 + s) ** -b, 0.0, math.inf)
    assert res.value == pytest.approx(1 / (b - 1), rel=1e-9)
