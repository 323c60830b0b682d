"""Model domains, boundary distance, dyadic partition of unity and the
regularized distance.

Points are numpy arrays whose last axis is the spatial dimension; every
function broadcasts over leading axes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .errors import DomainError, InputError

Array = np.ndarray


class Region(enum.IntEnum):
    INTERIOR = 1
    BOUNDARY = 0
    EXTERIOR = -1


def _as_points(x, d: int) -> Array:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != d:
        if d == 1:
            x = x[..., None]
        else:
            raise InputError(f"expected points of dimension {d}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class HalfSpace:
    """The half-space {x : x^1 > 0}."""

    d: int = 1

    kind = "halfspace"
    bounded = False

    def __post_init__(self):
        if self.d < 1:
            raise InputError("dimension must be >= 1")

    @property
    def diam(self) -> float:
        return math.inf

    def signed(self, x) -> Array:
        """Positive inside, negative outside; |signed| = d_x."""
        return _as_points(x, self.d)[..., 0]

    def dist(self, x) -> Array:
        return np.abs(self.signed(x))

    def dist_grad(self, x) -> Array:
        x = _as_points(x, self.d)
        g = np.zeros_like(x)
        g[..., 0] = np.sign(x[..., 0])
        return g

    def ray_crossings(self, x, direction) -> Array:
        """Distances r > 0 at which x + r*direction crosses the boundary."""
        x = np.asarray(x, float)
        w = np.asarray(direction, float)
        if w[0] == 0:
            return np.empty(0)
        r = -x[0] / w[0]
        return np.array([r]) if r > 0 else np.empty(0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "d": self.d}


@dataclass(frozen=True)
class Ball:
    """Open ball B_radius(center)."""

    center: tuple
    radius: float = 1.0

    kind = "ball"
    bounded = True

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InputError("radius must be positive and finite")

    @property
    def d(self) -> int:
        return len(self.center)

    @cached_property
    def c(self) -> Array:
        return np.asarray(self.center)

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    def signed(self, x) -> Array:
        x = _as_points(x, self.d)
        return self.radius - np.linalg.norm(x - self.c, axis=-1)

    def dist(self, x) -> Array:
        return np.abs(self.signed(x))

    def dist_grad(self, x) -> Array:
        x = _as_points(x, self.d)
        v = x - self.c
        n = np.linalg.norm(v, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(n > 0, v / n, 0.0)
        s = np.sign(self.signed(x))[..., None]
        return -s * u

    def ray_crossings(self, x, direction) -> Array:
        x = np.asarray(x, float) - self.c
        w = np.asarray(direction, float)
        a = float(w @ w)
        b = 2.0 * float(x @ w)
        cc = float(x @ x) - self.radius ** 2
        disc = b * b - 4 * a * cc
        if disc <= 0:
            return np.empty(0)
        sq = math.sqrt(disc)
        roots = np.array([(-b - sq) / (2 * a), (-b + sq) / (2 * a)])
        return roots[roots > 0]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class BallComplement(Ball):
    """Exterior {|x - center| > radius} of a ball."""

    kind = "ball_complement"
    bounded = False

    @property
    def diam(self) -> float:
        return math.inf

    def signed(self, x) -> Array:
        return -super().signed(x)

    def dist_grad(self, x) -> Array:
        x = _as_points(x, self.d)
        v = x - self.c
        n = np.linalg.norm(v, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(n > 0, v / n, 0.0)
        s = np.sign(self.signed(x))[..., None]
        return s * u


Domain = Union[HalfSpace, Ball, BallComplement]


def domain_from_dict(spec: dict) -> Domain:
    kind = spec.get("kind")
    if kind == "halfspace":
        return HalfSpace(int(spec.get("d", 1)))
    if kind == "ball":
        return Ball(tuple(spec["center"]), float(spec.get("radius", 1.0)))
    if kind == "ball_complement":
        return BallComplement(tuple(spec["center"]), float(spec.get("radius", 1.0)))
    raise InputError(f"unknown domain kind {kind!r}")


def classify(domain: Domain, x) -> Region | Array:
    """Interior / Boundary / Exterior; Boundary only at exact distance zero."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite coordinate")
    s = np.sign(domain.signed(x)).astype(int)
    if s.size == 1:
        return Region(int(s.reshape(-1)[0]))
    return s


def dist_to_boundary(domain: Domain, x) -> Array | float:
    v = domain.dist(x)
    return float(np.ravel(v)[0]) if np.ndim(v) == 0 or v.size == 1 else v


def inside(domain: Domain, x) -> Array:
    return domain.signed(x) > 0


# --- dyadic partition ----------------------------------------------------


def _bump_exp(t: Array) -> Array:
    out = np.zeros_like(t)
    m = t > 0
    out[m] = np.exp(-1.0 / t[m])
    return out


def smooth_step(s: Array) -> Array:
    """C-infinity step: 0 for s <= -1, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    a = _bump_exp(1.0 + s)
    b = _bump_exp(1.0 - s)
    return a / (a + b)


def smooth_step_prime(s: Array) -> Array:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    t1 = 1.0 + s[m]
    t2 = 1.0 - s[m]
    a = np.exp(-1.0 / t1)
    b = np.exp(-1.0 / t2)
    da = a / t1 ** 2
    db = -b / t2 ** 2
    out[m] = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class PartitionFamily:
    """Smooth functions zeta_n supported in the shells k1 e^{-n} < d_x < k2 e^{-n}.

    Each zeta_n is the indicator of k3 e^{-n} < d_x < k4 e^{-n},
    (k3, k4) = (e^{1/2} k1, e^{-1/2} k2), convolved in the d_x variable with
    a smooth bump of half-width min(k3, 1) e^{-n} / 4.
    """

    domain: Domain
    k1: float = 1.0
    k2: float = math.e ** 2
    side: int = 1  # +1: partition of D, -1: partition of the exterior

    def __post_init__(self):
        if not (0 < self.k1 < self.k2):
            raise InputError("need 0 < k1 < k2")
        if self.k2 / self.k1 < math.e ** 2 * (1 - 1e-12):
            # consecutive shells would leave gaps and the lower bound fails
            raise InputError("k2/k1 must be at least e^2 for the shells to overlap")
        if self.k3 - self.width0 <= self.k1 or self.k4 + self.width0 >= self.k2:
            raise InputError("mollification width leaves the prescribed support")

    @property
    def k3(self) -> float:
        return math.exp(0.5) * self.k1

    @property
    def k4(self) -> float:
        return math.exp(-0.5) * self.k2

    @property
    def width0(self) -> float:
        return min(self.k3, 1.0) / 4.0

    def profile(self, n: int, s: Array) -> Array:
        """zeta_n as a function of the boundary distance s."""
        s = np.asarray(s, dtype=float)
        sc = math.exp(-n)
        w = self.width0 * sc
        return smooth_step((s - self.k3 * sc) / w) - smooth_step((s - self.k4 * sc) / w)

    def profile_prime(self, n: int, s: Array) -> Array:
        s = np.asarray(s, dtype=float)
        sc = math.exp(-n)
        w = self.width0 * sc
        return (smooth_step_prime((s - self.k3 * sc) / w)
                - smooth_step_prime((s - self.k4 * sc) / w)) / w

    def active(self, s: float) -> range:
        """Indices n with zeta_n possibly nonzero at distance s > 0."""
        if s <= 0:
            return range(0)
        lo = math.floor(math.log(self.k1 / s)) - 1
        hi = math.ceil(math.log(self.k2 / s)) + 1
        return range(lo, hi + 1)

    def region_mask(self, x) -> Array:
        return self.side * self.domain.signed(x) > 0

    def zeta(self, n: int, x) -> Array:
        s = self.domain.dist(x)
        val = self.profile(n, s)
        return np.where(self.region_mask(x), val, 0.0)

    def zeta_grad(self, n: int, x) -> Array:
        s = self.domain.dist(x)
        g = self.profile_prime(n, s)[..., None] * self.domain.dist_grad(x)
        return np.where(self.region_mask(x)[..., None], g, 0.0)

    def zeta_sum(self, x) -> Array:
        s = self.domain.dist(x)
        total = _shell_sum(self, s, weighted=False)
        return np.where(self.region_mask(x), total, 0.0)


def zeta(partition: PartitionFamily, n: int, x) -> Array:
    return partition.zeta(n, x)


# --- regularized distance ------------------------------------------------


def _shell_sum(partition: PartitionFamily, s: Array, deriv: bool = False,
               weighted: bool = True) -> Array:
    s = np.asarray(s, dtype=float)
    flat = s.reshape(-1)
    out = np.zeros_like(flat)
    pos = flat[flat > 0]
    if pos.size:
        nmin = math.floor(math.log(partition.k1 / pos.max())) - 1
        nmax = math.ceil(math.log(partition.k2 / pos.min())) + 1
        acc = np.zeros_like(pos)
        for n in range(nmin, nmax + 1):
            f = partition.profile_prime(n, pos) if deriv else partition.profile(n, pos)
            acc += (math.exp(-n) if weighted else 1.0) * f
        out[flat > 0] = acc
    return out.reshape(s.shape)


@dataclass(frozen=True)
class RegularizedDistance:
    """psi(x) = sum_n e^{-n} zeta_n(x), computed from the handful of active shells."""

    partition: PartitionFamily

    @property
    def domain(self) -> Domain:
        return self.partition.domain

    @cached_property
    def bounds(self) -> tuple[float, float]:
        """Calibrated (c1, c2) with c1 <= psi/d_x <= c2.

        The profile is exactly self-similar under s -> s/e, so one period of
        s values determines the constants.
        """
        s = np.exp(np.linspace(0.0, 1.0, 4001)) * self.partition.k3
        r = _shell_sum(self.partition, s) / s
        return float(r.min()), float(r.max())

    def profile(self, s) -> Array:
        return _shell_sum(self.partition, s)

    def profile_prime(self, s) -> Array:
        return _shell_sum(self.partition, s, deriv=True)

    def __call__(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        s = self.domain.dist(x)
        if np.any(s == 0):
            raise DomainError("psi is undefined on the boundary")
        return _shell_sum(self.partition, s)

    def grad(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        s = self.domain.dist(x)
        if np.any(s == 0):
            raise DomainError("psi is undefined on the boundary")
        return _shell_sum(self.partition, s, deriv=True)[..., None] * self.domain.dist_grad(x)


def psi(rd: RegularizedDistance, x) -> Array:
    return rd(x)


def psi_grad(rd: RegularizedDistance, x) -> Array:
    return rd.grad(x)


def default_psi(domain: Domain) -> RegularizedDistance:
    return RegularizedDistance(PartitionFamily(domain))
