"""Weighted norms on D and on its exterior.

The weight is d_x^{theta-d} (1+d_x)^sigma with d_x the boundary distance.
Every integral is taken in the variable s = d_x on dyadic shells toward the
boundary (and toward infinity on unbounded regions), so boundary power laws
are resolved and divergent integrals show up as non-decaying shell sums.

Fields are weighted by psi^mu before the norm is taken, so psi^{-alpha/2} u
is expressed as ``mu=-alpha/2``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, DomainError, InputError
from .geometry import (Ball, BallComplement, Domain, HalfSpace, PartitionFamily,
                       RegularizedDistance, _as_points)
from .quadrature import ShellResult, panel_rule, shell_integrate, tail_ratio

Array = np.ndarray

# below this relative distance point coordinates no longer resolve d_x
_FLOOR = 1e-13


# --- regions ---------------------------------------------------------------


def region_side(region) -> int:
    """+1 for D, -1 for the exterior of its closure."""
    if region in (1, "D", "interior", "domain"):
        return 1
    if region in (-1, "Dc", "exterior", "complement"):
        return -1
    if hasattr(region, "value") and region.value in (1, -1):
        return int(region.value)
    raise InputError(f"unknown region {region!r}")


def _region_extent(domain: Domain, side: int) -> float:
    """Largest boundary distance reached in the region."""
    if isinstance(domain, HalfSpace):
        return math.inf
    inner = (side == 1) == (type(domain) is Ball)
    return domain.radius if inner else math.inf


@dataclass(frozen=True)
class LinePiece:
    """A half-line or segment y = anchor + direction * s, s in (0, length).

    Along the piece s is the distance to the boundary.
    """

    anchor: float
    direction: float
    length: float
    breaks: tuple = ()
    pivot: float = 1.0
    width: float = math.inf  # largest panel width

    def points(self, s) -> Array:
        return self.anchor + self.direction * np.asarray(s, dtype=float)

    def integrate(self, f: Callable, with_dist: bool = False, rtol: float = 1e-12,
                  order: int = 10) -> ShellResult:
        def g(s):
            y = self.points(s)
            return f(y, s) if with_dist else f(y)

        floor = _FLOOR * max(1.0, abs(self.anchor))
        return shell_integrate(g, 0.0, self.length, order=order, rtol=rtol,
                               pivot=self.pivot, breakpoints=self.breaks, floor=floor,
                               max_width=self.width)


def _pieces_1d(domain: Domain, side: int, s_breaks=(), pivot: float = 1.0) -> list[LinePiece]:
    if isinstance(domain, HalfSpace):
        specs = [(0.0, float(side), math.inf)]
    else:
        c, r = domain.center[0], domain.radius
        inner = (side == 1) == (type(domain) is Ball)
        if inner:
            specs = [(c - r, 1.0, r), (c + r, -1.0, r)]
        else:
            specs = [(c - r, -1.0, math.inf), (c + r, 1.0, math.inf)]
    out = []
    for anchor, dirn, length in specs:
        br = tuple(sorted({float(b) for b in s_breaks if 0 < b < length}))
        out.append(LinePiece(anchor, dirn, length, br, min(pivot, length)))
    return out


def line_pieces(domain: Domain, side: int, breaks: Sequence[float] = (),
                scale: float = 1.0) -> list[LinePiece]:
    """Cover the region (d = 1) by boundary-anchored pieces.

    ``breaks`` are coordinates where the integrand may be non-smooth; they
    are converted to boundary distances on each piece.
    """
    if domain.d != 1:
        raise InputError("line pieces exist for d = 1 only")
    side = region_side(side)
    base = _pieces_1d(domain, side, pivot=max(scale, 1e-300))
    out = []
    for p in base:
        s = [(b - p.anchor) * p.direction for b in breaks]
        br = tuple(sorted({v for v in s if 0 < v < p.length}))
        out.append(LinePiece(p.anchor, p.direction, p.length, br, p.pivot, 0.25 * scale))
    return out


def region_integrate(f: Callable[[Array, Array], Array], domain: Domain, region, *,
                     s_breaks: Sequence[float] = (), pivot: float = 1.0, n_angle: int = 64,
                     rtol: float = 1e-12, order: int = 10) -> ShellResult:
    """Integrate f(y, s) over D or its exterior, s the boundary distance of y.

    f maps points (N, d) and distances (N,) to values (N,) or (N, k).
    d = 1 uses boundary-anchored line pieces; d = 2 balls use polar
    coordinates about the center with an ``n_angle`` trapezoid rule.
    """
    side = region_side(region)
    d = domain.d
    if d == 1:
        pieces = _pieces_1d(domain, side, s_breaks, pivot)
        results = [p.integrate(lambda y, s: f(y[:, None], s), with_dist=True, rtol=rtol,
                               order=order) for p in pieces]
        return _merge(results)
    if d == 2 and isinstance(domain, Ball):
        c, r = domain.c, domain.radius
        inner = (side == 1) == (type(domain) is Ball)
        phi = 2 * math.pi * np.arange(n_angle) / n_angle
        circ = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        wphi = 2 * math.pi / n_angle
        length = r if inner else math.inf

        def g(s):
            rho = r - s if inner else r + s
            y = c + rho[:, None, None] * circ[None, :, :]
            ss = np.broadcast_to(s[:, None], y.shape[:-1])
            vals = np.asarray(f(y.reshape(-1, 2), ss.reshape(-1)), dtype=float)
            vals = vals.reshape(y.shape[:-1] + vals.shape[1:])
            jac = (rho * wphi).reshape((-1,) + (1,) * (vals.ndim - 1))
            return vals.sum(axis=1) * jac

        br = sorted({float(b) for b in s_breaks if 0 < b < length})
        return shell_integrate(g, 0.0, length, rtol=rtol, order=order,
                               pivot=min(pivot, length), breakpoints=br, floor=_FLOOR * r)
    raise InputError(f"region quadrature not available for {domain.kind} in d = {d}")


def _merge(results: list[ShellResult]) -> ShellResult:
    out = ShellResult(0.0, 0.0)
    for res in results:
        out.value = out.value + res.value
        out.error = out.error + res.error
        out.tail = out.tail + res.tail
        out.edges += list(res.edges)
        out.contributions += list(res.contributions)
    return out


def support_breaks(fld, domain: Domain) -> list[float]:
    """Boundary distances where a field's declared support starts or ends."""
    sup = getattr(fld, "support", None)
    if sup is None:
        return []
    c, rad = sup
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if domain.d == 1:
        ends = np.array([[c[0] - rad], [c[0] + rad], [c[0]]])
        return sorted({float(v) for v in domain.dist(ends) if v > 0})
    s0 = float(domain.dist(c))
    return sorted({v for v in (s0 - rad, s0, s0 + rad) if v > 0})


# --- weights and field derivatives ---------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    """Weight d_x^{theta-d} (1+d_x)^sigma, exponent p, integer smoothness n."""

    p: float
    theta: float
    sigma: float = 0.0
    n: int = 0

    def __post_init__(self):
        if not self.p > 1:
            raise InputError("p must exceed 1")
        if int(self.n) != self.n or self.n < 0:
            raise InputError("smoothness n must be a nonnegative integer")

    def weight(self, s: Array, d: int) -> Array:
        return s ** (self.theta - d) * (1.0 + s) ** self.sigma

    def to_dict(self) -> dict:
        return {"p": self.p, "theta": self.theta, "sigma": self.sigma, "n": self.n}


@dataclass(frozen=True)
class HolderSpec:
    """Weighted Holder quantities of psi^{k+offset} D^k u."""

    k: int
    delta: float
    offset: float = 0.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InputError("delta must lie in (0, 1)")
        if self.k < 0:
            raise InputError("k must be nonnegative")


def multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    """Multi-indices of a given order, as sorted tuples of axis numbers."""
    return list(itertools.combinations_with_replacement(range(d), order))


def _fd_first(v: Callable, y: Array, h: Array, axis: int) -> Array:
    e = np.zeros(y.shape[-1])
    e[axis] = 1.0
    hh = h[:, None] * e
    return (-v(y + 2 * hh) + 8 * v(y + hh) - 8 * v(y - hh) + v(y - 2 * hh)) / (12 * h)


def _fd_second(v: Callable, y: Array, h: Array, i: int, j: int) -> Array:
    d = y.shape[-1]
    ei = np.zeros(d)
    ei[i] = 1.0
    if i == j:
        hh = h[:, None] * ei
        return (-v(y + 2 * hh) + 16 * v(y + hh) - 30 * v(y) + 16 * v(y - hh)
                - v(y - 2 * hh)) / (12 * h * h)
    ej = np.zeros(d)
    ej[j] = 1.0
    hi, hj = h[:, None] * ei, h[:, None] * ej
    return (v(y + hi + hj) - v(y + hi - hj) - v(y - hi + hj) + v(y - hi - hj)) / (4 * h * h)


@dataclass
class WeightedField:
    """v = psi^mu u on a region, with derivatives up to second order.

    Analytic gradients of u are used when the field supplies them (first
    order only); otherwise derivatives are central differences with step
    d_x / 8, fourth order where the stencil allows.
    """

    fld: Callable
    domain: Domain
    mu: float = 0.0
    rd: RegularizedDistance | None = None

    def __post_init__(self):
        if self.rd is None:
            self.rd = RegularizedDistance(PartitionFamily(self.domain))

    def _u(self, y: Array) -> Array:
        return np.asarray(self.fld(y), dtype=float).reshape(y.shape[:-1])

    def value(self, y: Array, s: Array | None = None) -> Array:
        y = _as_points(y, self.domain.d)
        u = self._u(y)
        if self.mu == 0:
            return u
        s = self.domain.dist(y) if s is None else s
        return self.rd.profile(s) ** self.mu * u

    def derivatives(self, y: Array, s: Array, order: int) -> dict[tuple, Array]:
        """Map multi-index -> D^beta v at the points, for all |beta| <= order."""
        y = _as_points(y, self.domain.d)
        s = np.asarray(s, dtype=float)
        out = {(): self.value(y, s)}
        if order == 0:
            return out
        h = s / 8.0
        grad = getattr(self.fld, "grad", None)
        if grad is not None:
            du = np.asarray(grad(y), dtype=float).reshape(y.shape)
            if self.mu == 0:
                dv = du
            else:
                ps = self.rd.profile(s)
                dps = self.rd.profile_prime(s)[:, None] * self.domain.dist_grad(y)
                dv = (self.mu * ps ** (self.mu - 1))[:, None] * dps * self._u(y)[:, None] \
                    + (ps ** self.mu)[:, None] * du
            for i in range(y.shape[-1]):
                out[(i,)] = dv[:, i]
        else:
            for i in range(y.shape[-1]):
                out[(i,)] = _fd_first(self.value, y, h, i)
        if order >= 2:
            for i, j in multi_indices(y.shape[-1], 2):
                out[(i, j)] = _fd_second(self.value, y, h, i, j)
        if order > 2:
            raise InputError("derivatives beyond second order are not supported")
        return out


# --- reports ---------------------------------------------------------------


@dataclass
class NormReport:
    """A norm value with its per-term breakdown and quadrature diagnostics."""

    value: float
    error: float
    terms: list[dict] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"value": self.value, "error": self.error, "terms": self.terms,
                "diagnostics": self.diagnostics}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _pth_root(total: float, err: float, p: float) -> tuple[float, float]:
    if total <= 0:
        return 0.0, err ** (1 / p) if err > 0 else 0.0
    val = total ** (1.0 / p)
    return val, val * err / (p * total)


# --- integer-order weighted norms ---------------------------------------


def weighted_sobolev_norm(fld, domain: Domain, region, spec: WeightSpec, *, mu: float = 0.0,
                          rd: RegularizedDistance | None = None,
                          s_breaks: Sequence[float] = (), rtol: float = 1e-12,
                          n_angle: int = 64) -> NormReport:
    """sum_{|beta| <= n} ( int |d_x^{|beta|} D^beta v|^p d_x^{theta-d} (1+d_x)^sigma )^{1/p}.

    v = psi^mu u. Each multi-index term is reported separately. A
    non-decaying boundary or far-field shell sum raises DivergenceError.
    """
    side = region_side(region)
    d = domain.d
    wf = WeightedField(fld, domain, mu, rd)
    betas = [b for j in range(spec.n + 1) for b in multi_indices(d, j)]
    p = spec.p

    def integrand(y, s):
        ders = wf.derivatives(y, s, spec.n)
        w = spec.weight(s, d)
        cols = [np.abs(s ** len(b) * ders[b]) ** p * w for b in betas]
        return np.stack(cols, axis=-1)

    breaks = sorted(set(s_breaks) | set(support_breaks(fld, domain)))
    pivot = _pivot(fld, domain)
    res = region_integrate(integrand, domain, side, s_breaks=breaks, pivot=pivot, rtol=rtol,
                           n_angle=n_angle)
    vals = np.atleast_1d(res.value)
    errs = np.atleast_1d(res.error)
    terms = []
    total = err = 0.0
    for b, v, e in zip(betas, vals, errs):
        tv, te = _pth_root(float(v), float(e), p)
        terms.append({"beta": list(b), "order": len(b), "value": tv, "error": te})
        total += tv
        err += te
    diag = {"spec": spec.to_dict(), "mu": mu, "region": "D" if side == 1 else "Dc",
            "tail_extrapolation": np.atleast_1d(res.tail).tolist(),
            "shells": len(res.contributions)}
    return NormReport(total, err, terms, diag)


def weighted_lp_norm(fld, domain: Domain, region, spec: WeightSpec, **kw) -> NormReport:
    """The n = 0 case: ( int |v|^p d_x^{theta-d} (1+d_x)^sigma dx )^{1/p}."""
    if spec.n != 0:
        spec = WeightSpec(spec.p, spec.theta, spec.sigma, 0)
    return weighted_sobolev_norm(fld, domain, region, spec, **kw)


def _pivot(fld, domain: Domain) -> float:
    br = support_breaks(fld, domain)
    if br:
        return max(min(br), 1e-6)
    return float(getattr(fld, "scale", 1.0))


# --- dyadic-sum norm -------------------------------------------------------


def _shell_integral(wf: WeightedField, domain: Domain, side: int, partition: PartitionFamily,
                    m: int, betas, p: float, extent: float, fld_breaks, n_angle: int,
                    panels: int = 12, order: int = 12) -> Array:
    """int |D^beta (zeta_m v)|^p dx over the shell where zeta_m lives (per beta)."""
    sc = math.exp(-m)
    lo, hi = partition.k1 * sc, min(partition.k2 * sc, extent)
    if hi <= lo:
        return np.zeros(len(betas))
    w = partition.width0 * sc
    cuts = [partition.k3 * sc - w, partition.k3 * sc + w, partition.k4 * sc - w,
            partition.k4 * sc + w, *fld_breaks]
    edges = np.unique(np.concatenate([np.linspace(lo, hi, panels + 1),
                                      [c for c in cuts if lo < c < hi]]))
    s_nodes, s_w = panel_rule(edges, order)
    d = domain.d
    order_n = max(len(b) for b in betas)

    def evaluate(y, s):
        ders = wf.derivatives(y, s, order_n)
        z = partition.profile(m, s)
        cols = []
        for b in betas:
            if len(b) == 0:
                val = z * ders[()]
            else:
                dz = partition.profile_prime(m, s) * domain.dist_grad(y)[:, b[0]]
                val = z * ders[b] + dz * ders[()]
            cols.append(np.abs(val) ** p)
        return np.stack(cols, axis=-1)

    if d == 1:
        total = np.zeros(len(betas))
        for piece in _pieces_1d(domain, side):
            keep = s_nodes < piece.length
            if not np.any(keep):
                continue
            y = piece.points(s_nodes[keep])[:, None]
            total += s_w[keep] @ evaluate(y, s_nodes[keep])
        return total
    if d == 2 and isinstance(domain, Ball):
        inner = (side == 1) == (type(domain) is Ball)
        phi = 2 * math.pi * np.arange(n_angle) / n_angle
        circ = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        rho = domain.radius - s_nodes if inner else domain.radius + s_nodes
        y = domain.c + rho[:, None, None] * circ[None]
        ss = np.repeat(s_nodes, n_angle)
        vals = evaluate(y.reshape(-1, 2), ss).reshape(len(s_nodes), n_angle, -1).sum(axis=1)
        return (s_w * rho * 2 * math.pi / n_angle) @ vals
    raise InputError(f"dyadic norm not available for {domain.kind} in d = {d}")


def dyadic_norm(fld, domain: Domain, region, spec: WeightSpec, partition: PartitionFamily,
                *, mu: float = 0.0, rd: RegularizedDistance | None = None,
                rtol: float = 1e-12, max_shells: int = 80, n_angle: int = 64) -> NormReport:
    """( sum_n e^{n theta} (1+e^n)^sigma ||zeta_{-n}(e^n .) v(e^n .)||_{W^{n,p}}^p )^{1/p}.

    The per-shell Sobolev norm of integer order is sum_beta ||D^beta w||_p,
    evaluated in unscaled coordinates. The sum runs outward from the shells
    carrying the field and stops once a shell falls below ``rtol`` of the
    running total.
    """
    if spec.n > 1:
        raise InputError("dyadic norm is implemented for n in {0, 1}")
    side = region_side(region)
    d = domain.d
    p = spec.p
    wf = WeightedField(fld, domain, mu, rd)
    betas = [b for j in range(spec.n + 1) for b in multi_indices(d, j)]
    extent = _region_extent(domain, side)
    fld_breaks = support_breaks(fld, domain)

    def shell(n: int) -> float:
        # zeta_{-n} lives at d_x ~ e^n
        ints = _shell_integral(wf, domain, side, partition, -n, betas, p, extent, fld_breaks,
                               n_angle)
        norms = [math.exp(n * len(b) - n * d / p) * v ** (1 / p) for b, v in zip(betas, ints)]
        return math.exp(n * spec.theta) * (1 + math.exp(n)) ** spec.sigma * sum(norms) ** p

    anchor = _pivot(fld, domain)
    n0 = int(round(math.log(anchor / math.sqrt(partition.k1 * partition.k2))))
    n_top = math.ceil(math.log(extent / partition.k1)) if math.isfinite(extent) else None
    if n_top is not None:
        n0 = min(n0, n_top)
    n_floor = math.floor(math.log(_FLOOR * _scale_of(domain) / partition.k1))
    contrib: dict[int, float] = {n0: shell(n0)}
    diag = {"truncated_low": None, "truncated_high": None, "tail": [0.0, 0.0]}

    for direction in (-1, 1):
        n = n0
        quiet = 0
        vals = []
        while True:
            n += direction
            if direction == 1 and n_top is not None and n > n_top:
                diag["truncated_high"] = n - 1
                break
            if direction == -1 and n < n_floor:
                diag["truncated_low"] = n + 1
                diag["tail"][0] = _geometric_tail_scalar(vals)
                break
            v = shell(n)
            contrib[n] = v
            vals.append(v)
            running = math.fsum(contrib.values())
            quiet = quiet + 1 if (running > 0 and v <= rtol * running) else 0
            if quiet >= 3:
                key = "truncated_low" if direction == -1 else "truncated_high"
                diag[key] = n
                break
            if len(vals) >= max_shells:
                idx = 0 if direction == -1 else 1
                diag["tail"][idx] = _geometric_tail_scalar(vals)
                diag["truncated_low" if direction == -1 else "truncated_high"] = n
                break
    keys = sorted(contrib)
    total = math.fsum([contrib[k] for k in keys]) + sum(diag["tail"])
    err = abs(sum(diag["tail"])) * 0.3 + 1e-13 * total
    val, verr = _pth_root(total, err, p)
    diag.update({"spec": spec.to_dict(), "mu": mu, "partition": [partition.k1, partition.k2],
                 "shells": [{"n": k, "value": contrib[k]} for k in keys]})
    return NormReport(val, verr, [{"n": k, "value": contrib[k]} for k in keys], diag)


def _geometric_tail_scalar(vals: list) -> float:
    q, level = tail_ratio(vals)
    return level * q / (1 - q) if q > 0 else 0.0


def _scale_of(domain: Domain) -> float:
    return domain.radius if hasattr(domain, "radius") else 1.0


def bessel_kernel_l2(order: float, d: int) -> float:
    """|| (1 - Laplacian)^{-order/2} delta ||_{L_2(R^d)}, finite for order > d/2."""
    if order <= d / 2:
        raise DivergenceError("the Bessel kernel is square integrable only for order > d/2")
    val = math.pi ** (d / 2) * math.gamma(order - d / 2) / math.gamma(order) / (2 * math.pi) ** d
    return math.sqrt(val)


def point_mass_norm(x0, weight: float, domain: Domain, spec: WeightSpec,
                    partition: PartitionFamily, *, lam: float = -1.0, mu: float = 0.0,
                    rd: RegularizedDistance | None = None) -> NormReport:
    """Dyadic-sum norm of psi^mu weight*delta_{x0} at smoothness lam < -d/2, p = 2.

    Rescaling sends each shell's share of the mass to a point mass, whose
    H^lam_2 norm is the L_2 norm of the Bessel kernel of order -lam.
    """
    if spec.p != 2:
        raise InputError("point-mass norms are available for p = 2")
    d = domain.d
    x0 = _as_points(x0, d)
    side = int(np.sign(domain.signed(x0)).reshape(-1)[0])
    if side == 0:
        raise DomainError("point mass on the boundary")
    if rd is None:
        rd = RegularizedDistance(partition)
    s0 = float(domain.dist(x0).reshape(-1)[0])
    g = bessel_kernel_l2(-lam, d)
    terms = []
    total = 0.0
    for m in partition.active(s0):
        n = -m
        z = float(partition.profile(m, s0))
        if z == 0:
            continue
        coef = math.exp(-n * d) * abs(weight) * z * float(rd.profile(s0)) ** mu
        t = math.exp(n * spec.theta) * (1 + math.exp(n)) ** spec.sigma * (coef * g) ** 2
        terms.append({"n": n, "value": t})
        total += t
    val = math.sqrt(total)
    return NormReport(val, 1e-14 * val, terms,
                      {"lambda": lam, "spec": spec.to_dict(), "mu": mu, "d_x0": s0})


# --- weighted Holder quantities -------------------------------------------


def ladder_points(domain: Domain, s_values, side: int = 1) -> Array:
    """Points at boundary distances s_values along the first coordinate axis."""
    s = np.asarray(s_values, dtype=float)
    d = domain.d
    e1 = np.zeros(d)
    e1[0] = 1.0
    if isinstance(domain, HalfSpace):
        return side * s[:, None] * e1
    inner = (side == 1) == (type(domain) is Ball)
    rho = domain.radius - s if inner else domain.radius + s
    return domain.c + rho[:, None] * e1


@dataclass
class HolderReport:
    sup: float
    seminorm: float
    ladder: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"sup": self.sup, "seminorm": self.seminorm, "ladder": self.ladder}


def default_holder_sample(lo: float = 1e-6, hi: float = 1e-1, per_decade: int = 4) -> Array:
    n = int(round(math.log10(hi / lo) * per_decade)) + 1
    return np.geomspace(hi, lo, n)


def weighted_holder(fld, domain: Domain, hspec: HolderSpec, s_values=None, *,
                    rd: RegularizedDistance | None = None, side: int = 1,
                    pair_ratios: Sequence[float] = (0.25, 0.5)) -> HolderReport:
    """Sampled sup of |psi^{k+offset} D^k u| and of the delta-difference quotient
    of F = psi^{k+delta+offset} D^k u over pairs (x, x + q d_x grad d_x).

    Both numbers are lower bounds for the true quantities; the per-distance
    ladder lets callers fit growth rates.
    """
    if rd is None:
        rd = RegularizedDistance(PartitionFamily(domain, side=side))
    s = default_holder_sample() if s_values is None else np.asarray(s_values, dtype=float)
    k = hspec.k
    if k > 1:
        raise InputError("weighted_holder supports k in {0, 1}")
    wf = WeightedField(fld, domain, 0.0, rd)

    def dk(y, ss):
        ders = wf.derivatives(y, ss, k)
        if k == 0:
            return ders[()]
        return np.sqrt(sum(ders[(i,)] ** 2 for i in range(domain.d)))

    x = ladder_points(domain, s, side)
    base = dk(x, s)
    psi_x = rd.profile(s)
    sup_vals = np.abs(psi_x ** (k + hspec.offset) * base)
    f_x = psi_x ** (k + hspec.delta + hspec.offset) * base
    away = domain.dist_grad(x)
    quot = np.zeros_like(s)
    for q in pair_ratios:
        y = x + (q * s)[:, None] * away
        sy = domain.dist(y)
        f_y = rd.profile(sy) ** (k + hspec.delta + hspec.offset) * dk(y, sy)
        quot = np.maximum(quot, np.abs(f_x - f_y) / (q * s) ** hspec.delta)
    ladder = [{"d_x": float(a), "weighted": float(b), "quotient": float(c)}
              for a, b, c in zip(s, sup_vals, quot)]
    return HolderReport(float(np.max(sup_vals)), float(np.max(quot)), ladder)
