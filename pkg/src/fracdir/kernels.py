"""Free stable heat kernel, ball/half-space Green and Poisson kernels, and the
upper-bound envelopes for p_D, Q_D and K_D.

Envelopes are returned without their multiplicative constant; the harness
fits constants and checks that ratios stay bounded.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .errors import DomainError, InputError, SingularityError, StatisticalPowerError
from .geometry import Ball, Domain, HalfSpace, _as_points
from .quadrature import graded_edges, panel_rule

Array = np.ndarray


@dataclass(frozen=True)
class StableParams:
    """Dimension d and stability index alpha of the isotropic stable process."""

    d: int
    alpha: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InputError("d must be a positive integer")
        if not (0.0 < self.alpha < 2.0):
            raise InputError("alpha must lie strictly inside (0, 2)")

    @cached_property
    def c_d(self) -> float:
        """Normalizing constant of the singular-integral form of the operator."""
        d, a = self.d, self.alpha
        return (2.0 ** a * math.gamma((d + a) / 2)
                / (math.pi ** (d / 2) * abs(math.gamma(-a / 2))))

    def to_dict(self) -> dict:
        return {"d": self.d, "alpha": self.alpha, "c_d": self.c_d}


# --- free heat kernel -----------------------------------------------------

_XI_CUT = 37.0  # e^{-37} < 1e-16


def _series_coeffs(d: int, a: float, kmax: int = 400) -> tuple[Array, Array]:
    """log|a_k| and sign(a_k) for p(1,x) = sum_k a_k |x|^{-k a - d}."""
    k = np.arange(1, kmax + 1, dtype=float)
    loga = (k * a * math.log(2.0) + special.gammaln(k * a / 2 + 1)
            + special.gammaln((k * a + d) / 2) - special.gammaln(k + 1)
            - (d / 2 + 1) * math.log(math.pi))
    s = np.sin(k * math.pi * a / 2) * (-1.0) ** (k + 1)
    return loga, s


def _p1_series(r: float, d: int, a: float, coeffs) -> float | None:
    """Large-|x| expansion; None when it cannot deliver ~1e-13 relative accuracy."""
    loga, sgn = coeffs
    k = np.arange(1, loga.size + 1)
    logt = loga - (k * a + d) * math.log(r)
    mag = np.exp(np.clip(logt, -745, 700))
    terms = sgn * mag
    live = sgn != 0
    if a > 1:
        # asymptotic: stop at the smallest term
        stop = int(np.argmin(np.where(live, logt, np.inf))) + 1
    else:
        small = np.nonzero(live & (logt < logt[0] + math.log(1e-17)))[0]
        stop = int(small[0]) + 1 if small.size else loga.size
    total = float(np.sum(terms[:stop]))
    if total <= 0:
        return None
    last = mag[stop - 1] if stop < loga.size or a <= 1 else mag[-1]
    if last > 1e-14 * total or mag[:stop].max() > 1e2 * total:
        return None
    return total


def _radial_edges(r: float, a: float) -> Array:
    xmax = _XI_CUT ** (1.0 / a)
    head = graded_edges(0.0, min(1.0, xmax), toward="a", levels=40)
    edges = list(head)
    cap = 1.0 / r if r > 0 else np.inf
    x = head[-1]
    while x < xmax:
        x = min(xmax, x + min(0.25 * x, cap))
        edges.append(x)
    return np.asarray(edges)


def _bessel_part(d: int, z: Array) -> Array:
    """J_{d/2-1}(z) z^{1-d/2}, elementary where possible."""
    if d == 1:
        return math.sqrt(2 / math.pi) * np.cos(z)
    if d == 2:
        return special.j0(z)
    if d == 3:
        return math.sqrt(2 / math.pi) * np.sinc(z / math.pi)
    return special.jv(d / 2 - 1, z) * z ** (1 - d / 2)


def _p1_hankel(r: float, d: int, a: float, order: int = 16) -> float:
    """Radial Fourier inversion of exp(-|xi|^a).

    Panels are geometric in xi, capped at width 1/r so every panel sees at
    most a sixth of an oscillation.
    """
    nodes, weights = panel_rule(_radial_edges(r, a), order)
    f = np.exp(-nodes ** a) * nodes ** (d - 1)
    if r == 0:
        b = np.full_like(nodes, 2 ** (1 - d / 2) / math.gamma(d / 2))
    else:
        b = _bessel_part(d, r * nodes)
    return float(np.dot(weights, f * b) / (2 * math.pi) ** (d / 2))


def _p1_radial(r: Array, d: int, a: float) -> Array:
    r = np.asarray(r, dtype=float)
    if a == 1.0:
        return (math.gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2)
                / (1.0 + r * r) ** ((d + 1) / 2))
    coeffs = _series_coeffs(d, a)
    out = np.empty(r.size)
    for i, ri in enumerate(r.reshape(-1)):
        if ri == 0.0:
            out[i] = math.gamma(d / a) / (a * 2 ** (d - 1) * math.pi ** (d / 2) * math.gamma(d / 2))
            continue
        v = _p1_series(ri, d, a, coeffs)
        out[i] = _p1_hankel(ri, d, a) if v is None else v
    return out.reshape(r.shape)


def free_heat_kernel(params: StableParams, t, x) -> Array | float:
    """Transition density p(t, x) of the isotropic alpha-stable process."""
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise InputError("t must be positive")
    x = _as_points(x, params.d)
    a, d = params.alpha, params.d
    r = np.linalg.norm(x, axis=-1)
    scale = t ** (1.0 / a)
    rr = np.broadcast_to(r / scale, np.broadcast_shapes(r.shape, t.shape))
    out = _p1_radial(rr, d, a) / scale ** d
    return float(out) if out.ndim == 0 else out


def heat_kernel_bound(params: StableParams, t, x) -> Array:
    """t^{-d/alpha} min t |x|^{-d-alpha}: the two-sided comparison profile."""
    t = np.asarray(t, dtype=float)
    x = _as_points(x, params.d)
    r = np.linalg.norm(x, axis=-1)
    d, a = params.d, params.alpha
    with np.errstate(divide="ignore"):
        far = t * r ** (-d - a)
    return np.minimum(t ** (-d / a), far)


# --- ball and half-space kernels -----------------------------------------


def _poisson_const(params: StableParams) -> float:
    d, a = params.d, params.alpha
    return math.gamma(d / 2) * math.pi ** (-d / 2 - 1) * math.sin(math.pi * a / 2)


def poisson_kernel(domain: Domain, params: StableParams, x, z) -> Array | float:
    """Density of the exit position from ``domain`` started at x (closed form).

    Ball: C [(r^2-|x-c|^2)/(|z-c|^2-r^2)]^{alpha/2} |x-z|^{-d}.
    Half-space: the same with the ratio replaced by x^1 / (-z^1).
    """
    if params.d != domain.d:
        raise InputError("dimension mismatch between domain and params")
    x = _as_points(x, params.d)
    z = _as_points(z, params.d)
    sx = domain.signed(x)
    sz = domain.signed(z)
    if np.any(sx <= 0):
        raise DomainError("x must lie in the domain")
    if np.any(sz >= 0):
        raise DomainError("z must lie in the exterior of the closed domain")
    a = params.alpha
    if isinstance(domain, HalfSpace):
        ratio = x[..., 0] / (-z[..., 0])
    elif type(domain) is Ball:
        r2 = domain.radius ** 2
        ratio = ((r2 - np.sum((x - domain.c) ** 2, axis=-1))
                 / (np.sum((z - domain.c) ** 2, axis=-1) - r2))
    else:
        raise InputError(f"no closed-form Poisson kernel for {domain.kind}")
    dist = np.linalg.norm(x - z, axis=-1)
    out = _poisson_const(params) * ratio ** (a / 2) * dist ** (-params.d)
    return float(out) if out.ndim == 0 else out


def poisson_kernel_gap(domain: Domain, params: StableParams, x, s, omega) -> Array:
    """K_D(x, z) with z given by its exterior distance s > 0 and a direction.

    Ball: z = c + (r + s) omega, omega a unit vector. Half-space:
    z = (-s, omega) with omega the d-1 tangential coordinates (ignored for
    d = 1). Computing |z-c|^2 - r^2 = s (2r + s) directly keeps the
    boundary layer resolved for s far below machine epsilon times r.
    """
    d, a = params.d, params.alpha
    x = _as_points(x, d)
    s = np.asarray(s, dtype=float)
    if np.any(domain.signed(x) <= 0):
        raise DomainError("x must lie in the domain")
    if np.any(s <= 0):
        raise DomainError("exterior distance must be positive")
    if isinstance(domain, HalfSpace):
        tang = np.asarray(omega, float) if d > 1 else np.zeros(s.shape + (0,))
        tang = np.broadcast_to(tang, s.shape + (d - 1,))
        ratio = x[..., 0] / s
        dist2 = (x[..., 0] + s) ** 2 + np.sum((x[..., 1:] - tang) ** 2, axis=-1)
    elif type(domain) is Ball:
        om = np.broadcast_to(np.asarray(omega, float), s.shape + (d,))
        r = domain.radius
        xc = x - domain.c
        ratio = (r * r - np.sum(xc ** 2, axis=-1)) / (s * (2 * r + s))
        dist2 = np.sum((xc - (r + s)[..., None] * om) ** 2, axis=-1)
    else:
        raise InputError(f"no closed-form Poisson kernel for {domain.kind}")
    return _poisson_const(params) * ratio ** (a / 2) * dist2 ** (-d / 2)


def _gap_mass_table(domain: Domain, params: StableParams, x: float, side: float):
    """Cumulative exit mass on one side as a function of the exterior gap s (d = 1).

    Returns (s_grid, mass(0, s)) with the head below the first node and the
    tail beyond the last added from the local power laws of the kernel.
    """
    s = np.concatenate([[0.0], np.geomspace(1e-30, 1e15, 3001)])
    nodes, weights = panel_rule(s[1:], 8)
    k = poisson_kernel_gap(domain, params, x, nodes, [side]) * weights
    cum = np.concatenate([[0.0], np.cumsum(k.reshape(-1, 8).sum(axis=1))])
    a = params.alpha
    s0 = s[1]
    head = poisson_kernel_gap(domain, params, x, s0, [side]) * s0 / (1 - a / 2)
    cum = np.concatenate([[0.0], head + cum])
    s_last = s[-1]
    tail = poisson_kernel_gap(domain, params, x, s_last, [side]) * s_last / a
    return s, cum, float(cum[-1] + tail)


def exit_cdf_1d(domain: Domain, params: StableParams, x: float, z) -> Array:
    """CDF of the exit position x + X_tau for d = 1 (ball or half-space)."""
    if params.d != 1:
        raise InputError("exit_cdf_1d is for d = 1")
    z = np.asarray(z, dtype=float)
    x = float(np.ravel(x)[0])
    a = params.alpha
    if isinstance(domain, HalfSpace):
        if not x > 0:
            raise DomainError("x must lie in the domain")
        sg = np.clip(-z, 0.0, None)
        # P(X_tau <= z) = P(gap >= -z) with gap/(x+gap) ~ Beta(1-a/2, a/2)
        return np.where(z < 0, special.betaincc(1 - a / 2, a / 2, sg / (x + sg)), 1.0)
    c, r = domain.c[0], domain.radius
    sl, cl, ml = _gap_mass_table(domain, params, x, -1.0)
    sr, cr, mr = _gap_mass_table(domain, params, x, 1.0)
    total = ml + mr
    gl = np.clip(c - r - z, 0.0, None)
    gr = np.clip(z - c - r, 0.0, None)
    left = ml - np.interp(gl, sl, cl)
    right = ml + np.interp(gr, sr, cr)
    out = np.where(z <= c - r, left, np.where(z >= c + r, right, ml))
    return out / total


def _green_integral(w: Array, d: int, a: float) -> Array:
    """int_0^w s^{a/2-1} (1+s)^{-d/2} ds.

    Pfaff-transformed 2F1 in u = w/(1+w) for w <= 1; for w > 1 the
    connection formula in 1 - u = 1/(1+w), which stays accurate as x -> y.
    alpha = 1 has elementary forms (and an integer parameter gap for odd d).
    """
    w = np.asarray(w, dtype=float)
    if a == 1.0 and d in (1, 2, 3):
        q = np.sqrt(w)
        if d == 1:
            return 2.0 * np.arcsinh(q)
        if d == 2:
            return 2.0 * np.arctan(q)
        return 2.0 * q / np.sqrt(1.0 + w)
    b = a / 2
    h = d / 2
    out = np.empty_like(w)
    small = w <= 1.0
    ws = w[small]
    out[small] = (ws ** b / b) * (1.0 + ws) ** (-h) * special.hyp2f1(h, 1.0, b + 1.0,
                                                                      ws / (1.0 + ws))
    wl = w[~small]
    v = 1.0 / (1.0 + wl)
    gc = math.gamma(b + 1.0)
    A = gc * math.gamma(b - h) / (math.gamma(b + 1.0 - h) * math.gamma(b))
    B = gc * math.gamma(h - b) / math.gamma(h)
    F = (A * special.hyp2f1(h, 1.0, h - b + 1.0, v)
         + B * v ** (b - h) * special.hyp2f1(b + 1.0 - h, b, b - h + 1.0, v))
    out[~small] = (wl ** b / b) * v ** h * F
    return out


def green_function_ball(ball: Ball, params: StableParams, x, y) -> Array | float:
    """Green function of the ball for the killed stable process.

    kappa |x-y|^{alpha-d} int_0^w s^{alpha/2-1}(1+s)^{-d/2} ds with
    w = (r^2-|x|^2)(r^2-|y|^2) / (r^2 |x-y|^2), centered coordinates.
    Zero when either point is outside the ball.
    """
    x = _as_points(x, params.d)
    y = _as_points(y, params.d)
    return green_function_offset(ball, params, x, y - x)


def green_function_offset(ball: Ball, params: StableParams, x, h) -> Array | float:
    """G(x, x + h), with |h| used as given so that tiny offsets keep full precision."""
    x = _as_points(x, params.d)
    h = _as_points(h, params.d)
    diff = np.linalg.norm(h, axis=-1)
    if np.any(diff == 0):
        raise SingularityError("Green function is singular at x = y")
    d, a = params.d, params.alpha
    r2 = ball.radius ** 2
    hx = r2 - np.sum((x - ball.c) ** 2, axis=-1)
    hy = r2 - np.sum((x + h - ball.c) ** 2, axis=-1)
    inside = (hx > 0) & (hy > 0)
    w = np.where(inside, hx * hy, 0.0) / (r2 * diff ** 2)
    kappa = math.gamma(d / 2) / (2 ** a * math.pi ** (d / 2) * math.gamma(a / 2) ** 2)
    g = kappa * diff ** (a - d) * _green_integral(w, d, a)
    out = np.where(inside, g, 0.0)
    return float(out) if out.ndim == 0 else out


def mean_exit_time_ball(ball: Ball, params: StableParams, x) -> Array | float:
    """E^x tau for the ball; equals the integral of G(x, .) over the ball."""
    x = _as_points(x, params.d)
    d, a = params.d, params.alpha
    h = np.maximum(ball.radius ** 2 - np.sum((x - ball.c) ** 2, axis=-1), 0.0)
    const = math.gamma(d / 2) / (2 ** a * math.gamma(1 + a / 2) * math.gamma((d + a) / 2))
    out = const * h ** (a / 2)
    return float(out) if out.ndim == 0 else out


# --- bound envelopes -----------------------------------------------------

ENVELOPE_KINDS = ("PD", "QD", "QD-far", "KD-half", "KD-bounded")


@dataclass(frozen=True)
class KernelBoundEnvelope:
    """Right-hand side of a kernel upper bound, constant omitted.

    ``decay`` is the e^{-ct} rate used by the PD envelope on bounded domains.
    """

    kind: str
    params: StableParams
    domain: Domain
    decay: float = 0.0

    def __post_init__(self):
        if self.kind not in ENVELOPE_KINDS:
            raise InputError(f"unknown envelope kind {self.kind!r}")


def r_factor(params: StableParams, dist, t) -> Array:
    """R_{t,x} = 1 min d_x^{alpha/2} / sqrt(t)."""
    return np.minimum(1.0, np.asarray(dist, float) ** (params.alpha / 2) / np.sqrt(t))


def s_factor(params: StableParams, t, x, z) -> Array:
    """S_{t,x,z} = t^{-d/alpha-1} min |x-z|^{-d-alpha}."""
    d, a = params.d, params.alpha
    r = np.linalg.norm(_as_points(x, d) - _as_points(z, d), axis=-1)
    return np.minimum(np.asarray(t, float) ** (-d / a - 1), r ** (-d - a))


def envelope_value(env: KernelBoundEnvelope, t, x, z) -> Array | float:
    """Evaluate the envelope; ``t`` is ignored for the time-independent K_D kinds.

    For PD the second point ``z`` plays the role of y (both in D).
    """
    p = env.params
    a, d = p.alpha, p.d
    x = _as_points(x, d)
    z = _as_points(z, d)
    dx = env.domain.dist(x)
    dz = env.domain.dist(z)
    r = np.linalg.norm(x - z, axis=-1)
    if env.kind in ("PD", "QD", "QD-far"):
        t = np.asarray(t, dtype=float)
        if np.any(~(t > 0)):
            raise InputError("t must be positive for parabolic envelopes")
    if env.kind == "PD":
        out = r_factor(p, dx, t) * r_factor(p, dz, t) * free_heat_kernel(p, t, x - z)
        if env.decay:
            out = out * np.exp(-env.decay * t)
    elif env.kind == "QD":
        out = s_factor(p, t, x, z) * r_factor(p, dx, t) / r_factor(p, dz, t)
    elif env.kind == "QD-far":
        out = r ** (-d) * np.minimum(1.0, t ** (-d / a - 0.5)) * r_factor(p, dx, t) * dz ** (-a)
    elif env.kind == "KD-half":
        out = dx ** (a / 2) * dz ** (-a / 2) * r ** (-d)
    else:
        out = dx ** (a / 2) * (1 + dz) ** (-a / 2) * dz ** (-a / 2) * r ** (-d)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


# --- Monte Carlo parabolic kernels -----------------------------------------


@dataclass
class KernelEstimate:
    value: Array
    stderr: Array
    survivors: int
    paths: int

    def to_dict(self) -> dict:
        return {"value": np.atleast_1d(self.value).tolist(),
                "stderr": np.atleast_1d(self.stderr).tolist(),
                "survivors": self.survivors, "paths": self.paths}


def _surviving_positions(ball: Ball, params: StableParams, t: float, x, mc):
    from .stochastic import killed_paths_mc

    if params.d != 1:
        raise InputError("Monte Carlo kernel estimates are provided for d = 1 only")
    if not t > 0:
        raise InputError("t must be positive")
    batch = killed_paths_mc(ball, params, x, mc, horizon=t)
    alive = ~batch.exited
    return batch.positions[alive], batch.positions.shape[0]


def qd_estimate_mc(ball: Ball, params: StableParams, t: float, x, z, mc,
                   min_survivors: int = 50) -> KernelEstimate:
    """Q_D(t, x, z) = c_d E[|X_t - z|^{-d-alpha}; tau > t], for one or more z.

    The expectation of the jump kernel over surviving positions is the
    zero-bin-width limit of a p_D histogram integrated against
    c_d |y - z|^{-d-alpha}.
    """
    z = _as_points(z, params.d)
    if np.any(ball.signed(z) >= 0):
        raise DomainError("z must be exterior")
    pos, n = _surviving_positions(ball, params, t, x, mc)
    if pos.shape[0] < min_survivors:
        raise StatisticalPowerError(f"only {pos.shape[0]} of {n} paths survived to t={t}")
    zz = z.reshape(-1, params.d)
    k = params.c_d * np.linalg.norm(pos[:, None, :] - zz[None, :, :], axis=-1) ** (
        -params.d - params.alpha)
    # non-survivors contribute zero
    mean = k.sum(axis=0) / n
    second = (k ** 2).sum(axis=0) / n
    se = np.sqrt(np.maximum(second - mean ** 2, 0.0) / n)
    shape = z.shape[:-1]
    return KernelEstimate(mean.reshape(shape), se.reshape(shape), pos.shape[0], n)


def pd_histogram_mc(ball: Ball, params: StableParams, t: float, x, mc, bins=None,
                    min_survivors: int = 50):
    """Histogram estimate of y -> p_D(t, x, y) (d = 1).

    ``bins`` is a count of uniform bins, an array of edges, or None for the
    Freedman-Diaconis rule on surviving positions.
    Returns (centers, density, stderr).
    """
    pos, n = _surviving_positions(ball, params, t, x, mc)
    if pos.shape[0] < min_survivors:
        raise StatisticalPowerError(f"only {pos.shape[0]} of {n} paths survived to t={t}")
    y = pos[:, 0]
    lo, hi = ball.c[0] - ball.radius, ball.c[0] + ball.radius
    if bins is None:
        edges = np.histogram_bin_edges(y, bins="fd", range=(lo, hi))
    elif np.ndim(bins) == 1:
        edges = np.asarray(bins, dtype=float)
    else:
        edges = np.linspace(lo, hi, int(bins) + 1)
    counts, edges = np.histogram(y, bins=edges)
    w = np.diff(edges)
    dens = counts / (n * w)
    se = np.sqrt(counts * (1 - counts / n)) / (n * w)
    return 0.5 * (edges[:-1] + edges[1:]), dens, se


def write_kernel_csv(path, rows) -> None:
    """Rows of dicts with keys t, x, z, value, envelope (ratio added here)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "z", "value", "envelope", "ratio"])
        for r in rows:
            x = " ".join(f"{v:.12g}" for v in np.atleast_1d(r["x"]))
            z = " ".join(f"{v:.12g}" for v in np.atleast_1d(r["z"]))
            t = r.get("t")
            w.writerow(["" if t is None else f"{t:.12g}", x, z, f"{r['value']:.12g}",
                        f"{r['envelope']:.12g}", f"{r['value'] / r['envelope']:.12g}"])
