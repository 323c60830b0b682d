import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracdir.errors import DomainError, InputError
from fracdir.geometry import (Ball, BallComplement, HalfSpace, PartitionFamily, Region, classify,
                              default_psi, dist_to_boundary, domain_from_dict, psi, psi_grad, zeta)


def test_classify_examples():
    assert classify(HalfSpace(2), [0.3, -1.2]) == Region.INTERIOR
    assert classify(Ball((0.0, 0.0), 1.0), [1.0, 0.0]) == Region.BOUNDARY
    assert classify(Ball((0.0, 0.0), 1.0), [2.0, 0.0]) == Region.EXTERIOR


def test_dist_examples():
    assert dist_to_boundary(HalfSpace(2), [0.3, -1.2]) == pytest.approx(0.3)
    assert dist_to_boundary(Ball((0.0, 0.0), 1.0), [0.6, 0.0]) == pytest.approx(0.4)
    assert dist_to_boundary(Ball((0.0, 0.0), 1.0), [2.0, 0.0]) == pytest.approx(1.0)


def test_ball_complement_flips_sides():
    bc = BallComplement((0.0,), 1.0)
    assert classify(bc, [2.0]) == Region.INTERIOR
    assert classify(bc, [0.5]) == Region.EXTERIOR


def test_domain_from_dict_roundtrip():
    b = domain_from_dict({"kind": "ball", "center": [1.0, 2.0], "radius": 3.0})
    assert b == Ball((1.0, 2.0), 3.0)
    assert domain_from_dict(b.to_dict()) == b
    assert domain_from_dict({"kind": "halfspace", "d": 2}) == HalfSpace(2)
    with pytest.raises(InputError):
        domain_from_dict({"kind": "cube"})


def test_nonfinite_point_rejected():
    with pytest.raises(InputError):
        classify(Ball((0.0,), 1.0), [math.nan])


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_dist_nonnegative_and_sign_consistent(x, y):
    b = Ball((0.0, 0.0), 1.0)
    d = dist_to_boundary(b, [x, y])
    assert d >= 0
    assert d == pytest.approx(abs(1 - math.hypot(x, y)), abs=1e-12)


def test_zeta_examples():
    part = PartitionFamily(HalfSpace(1))
    assert zeta(part, 0, [[10.0]])[0] == 0.0
    v = zeta(part, 0, [[math.e]])[0]
    assert 0 < v <= 1


def test_zeta_sum_bounded_below():
    part = PartitionFamily(HalfSpace(1))
    period = np.exp(np.linspace(0.0, 1.0, 2001))
    c = part.zeta_sum(period[:, None]).min()
    assert c > 0.5
    s = np.geomspace(1e-8, 1e3, 500)
    total = part.zeta_sum(s[:, None])
    assert np.all(total >= c - 1e-12)
    assert np.all(total <= 2.0 + 1e-12)


def test_partition_rejects_gappy_shells():
    with pytest.raises(InputError):
        PartitionFamily(HalfSpace(1), 1.0, 5.0)


def test_psi_comparable_to_distance():
    rd = default_psi(HalfSpace(1))
    c1, c2 = rd.bounds
    assert 0 < c1 <= c2
    v = psi(rd, [[0.5]])[0]
    assert c1 * 0.5 - 1e-12 <= v <= c2 * 0.5 + 1e-12
    rb = default_psi(Ball((0.0,), 1.0))
    v0 = psi(rb, [[0.0]])[0]
    assert rb.bounds[0] - 1e-12 <= v0 <= rb.bounds[1] + 1e-12


@given(st.floats(1e-6, 1e3))
@settings(max_examples=60)
def test_psi_self_similar(x):
    rd = default_psi(HalfSpace(1))
    c1, c2 = rd.bounds
    r = psi(rd, [[2 * x]])[0] / psi(rd, [[x]])[0]
    assert 2 * c1 / c2 - 1e-9 <= r <= 2 * c2 / c1 + 1e-9
    # exact invariance under s -> e s
    assert psi(rd, [[math.e * x]])[0] == pytest.approx(math.e * psi(rd, [[x]])[0], rel=1e-9)


def test_psi_gradient_matches_finite_difference():
    rd = default_psi(HalfSpace(1))
    x, h = 0.37, 1e-6
    fd = (psi(rd, [[x + h]])[0] - psi(rd, [[x - h]])[0]) / (2 * h)
    assert psi_grad(rd, [[x]])[0, 0] == pytest.approx(fd, rel=1e-5)


def test_psi_undefined_on_boundary():
    with pytest.raises(DomainError):
        psi(default_psi(HalfSpace(1)), [[0.0]])
