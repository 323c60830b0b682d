"""Solution fields of the exterior-value problems.

Elliptic: u = K_D g - G_D f in D and u = g outside, where K_D is the
Poisson kernel and G_D the Green function of the killed process (so that
Delta^{alpha/2} G_D f = -f). Parabolic (zero initial data, f = 0):
u(t, x) = E[g(t - tau, X_tau); tau < t].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, DomainError, InputError, IntegrabilityError
from .fraclap import PointMass, ScalarField, _sphere_crossings
from .geometry import Ball, BallComplement, Domain, HalfSpace, _as_points
from .kernels import StableParams, green_function_offset, poisson_kernel, poisson_kernel_gap
from .quadrature import gauss_legendre, panel_rule, refine_uniform, shell_integrate
from .spaces import _pieces_1d
from .stochastic import McConfig, killed_paths_mc, walk_on_spheres_mc

Array = np.ndarray

# innermost exterior distance resolved by panels; below it a power law is used
S_MIN = 1e-8
S_MAX = 1e12


# --- exterior data -----------------------------------------------------------


@dataclass(frozen=True)
class ClosedForm:
    """Exterior data given by a field g on the complement of D."""

    g: ScalarField

    def __call__(self, z) -> Array:
        return np.asarray(self.g(z), dtype=float)


@dataclass(frozen=True)
class TimeDependent:
    """Parabolic exterior data (s, z) -> g(s, z); ``bound`` is sup |g|."""

    rule: Callable[[Array, Array], Array]
    bound: float = 1.0

    def __call__(self, s, z) -> Array:
        return np.asarray(self.rule(np.asarray(s, float), np.asarray(z, float)), dtype=float)


ExteriorData = ClosedForm | PointMass | TimeDependent


@dataclass
class Estimate:
    """Values with an error bar (quadrature error or Monte Carlo standard error)."""

    value: float | Array
    error: float | Array
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def j(v):
            v = np.asarray(v)
            return float(v) if v.ndim == 0 else v.tolist()
        return {"value": j(self.value), "error": j(self.error), "warnings": list(self.warnings)}


def _squeeze(v: Array, like) -> float | Array:
    return float(v[0]) if np.ndim(like) <= 1 and v.size == 1 else v


# --- Poisson-kernel quadrature ---------------------------------------------


def _support_s_range(g: ScalarField, piece) -> tuple[float, float] | None:
    """Exterior-distance interval of a piece met by the support of g (d = 1)."""
    if g.support is None:
        return 0.0, math.inf
    c, rad = g.support
    c = float(np.ravel(c)[0])
    s_a = (c - rad - piece.anchor) * piece.direction
    s_b = (c + rad - piece.anchor) * piece.direction
    lo, hi = max(min(s_a, s_b), 0.0), max(s_a, s_b)
    if hi <= 0:
        return None
    return lo, hi


def _s_edges(lo: float, hi: float, scale: float) -> Array:
    """Panels on (lo, hi): geometric toward 0 and toward infinity, scale-capped."""
    a = max(lo, S_MIN)
    b = min(hi, S_MAX)
    if b <= a:
        return np.array([a, a])
    geo = np.geomspace(a, b, max(2, int(math.ceil(math.log2(b / a))) + 1))
    # uniform refinement at the field's scale; farther out g must vary slowly
    near = geo[geo <= 64 * scale]
    if near.size < 2:
        return geo
    return np.concatenate([refine_uniform(near, 0.5 * scale), geo[geo > 64 * scale]])


@dataclass
class _PieceRule:
    """High- and low-order exterior nodes of one piece, with g sampled on them."""

    direction: float
    nodes: Array
    weights: Array
    g_nodes: Array
    nodes_lo: Array
    weights_lo: Array
    g_lo: Array
    head: tuple | None  # (s0, g(s0)) when the support reaches the boundary
    tail: tuple | None  # (S, g(S)) when the support is unbounded


def _piece_rules(domain: Domain, g: ScalarField, order: int = 10) -> list[_PieceRule]:
    def sample(piece, s):
        return np.asarray(g(piece.points(s)[:, None]), dtype=float).reshape(-1)

    rules = []
    for piece in _pieces_1d(domain, -1):
        rng = _support_s_range(g, piece)
        if rng is None:
            continue
        lo, hi = rng
        edges = _s_edges(lo, hi, g.scale)
        n_hi, w_hi = panel_rule(edges, order)
        n_lo, w_lo = panel_rule(edges, order // 2 + 1)
        head = (S_MIN, float(sample(piece, np.array([S_MIN]))[0])) if lo <= S_MIN else None
        tail = (S_MAX, float(sample(piece, np.array([S_MAX]))[0])) if hi >= S_MAX else None
        rules.append(_PieceRule(piece.direction, n_hi, w_hi, sample(piece, n_hi),
                                n_lo, w_lo, sample(piece, n_lo), head, tail))
    return rules


def _kernel_1d(domain: Domain, params: StableParams, x: Array, s: Array, direction: float):
    """K_D(x, anchor + direction*s) for points x (N,) and distances s (M,) -> (N, M)."""
    xs = x[:, None, None]
    ss = np.broadcast_to(s[None, :], (x.size, s.size))
    om = np.full(ss.shape + (1,), direction)
    return poisson_kernel_gap(domain, params, xs, ss, om)


class _KernelQuadrature1D:
    """u(x) = int K_D(x, z) g(z) dz on fixed exterior panels shared by all x."""

    def __init__(self, domain: Domain, params: StableParams, g: ScalarField, order: int = 10):
        if not isinstance(domain, (Ball, HalfSpace)) or type(domain) is BallComplement:
            raise InputError("kernel quadrature needs a ball or a half-space")
        self.domain, self.params = domain, params
        self.rules = _piece_rules(domain, g, order)

    def __call__(self, x: Array) -> tuple[Array, Array]:
        a = self.params.alpha
        val = np.zeros(x.shape[0])
        low = np.zeros(x.shape[0])
        for rule in self.rules:
            if rule.nodes.size:
                k_hi = _kernel_1d(self.domain, self.params, x, rule.nodes, rule.direction)
                val += k_hi @ (rule.weights * rule.g_nodes)
                k_lo = _kernel_1d(self.domain, self.params, x, rule.nodes_lo, rule.direction)
                low += k_lo @ (rule.weights_lo * rule.g_lo)
            extra = np.zeros(x.shape[0])
            if rule.head is not None and rule.head[1] != 0:
                extra += rule.head[1] * self._head(x, rule.head[0], rule.direction)
            if rule.tail is not None and rule.tail[1] != 0:
                extra += rule.tail[1] * self._tail(x, rule.tail[0], rule.direction)
            val += extra
            low += extra
        return val, np.abs(val - low) + 1e-15 * np.abs(val)

    def _head(self, x: Array, eps: float, direction: float) -> Array:
        """int_0^eps K ds: s = eps u^{1/b}, b = 1 - alpha/2, makes the d_z^{-alpha/2} law flat."""
        b = 1.0 - self.params.alpha / 2
        u, w = panel_rule(np.geomspace(1e-6, 1.0, 8), 12)
        u = np.concatenate([[0.5e-6], u])
        w = np.concatenate([[1e-6], w])
        s = eps * u ** (1 / b)
        jac = eps / b * u ** (1 / b - 1)
        return _kernel_1d(self.domain, self.params, x, s, direction) @ (w * jac)

    def _tail(self, x: Array, big: float, direction: float) -> Array:
        """int_big^inf K ds from the local decay exponent of K."""
        k = _kernel_1d(self.domain, self.params, x, np.array([0.5 * big, big]), direction)
        q = np.log(k[:, 1] / k[:, 0]) / math.log(2.0)
        return k[:, 1] * big / (-q - 1)


def _kernel_quadrature_2d(ball: Ball, params: StableParams, g: ScalarField, x: Array,
                          order: int = 10) -> tuple[float, float]:
    """Polar quadrature about the center; angles graded toward the direction of x."""
    c, r = ball.c, ball.radius
    lo, hi = 0.0, math.inf
    if g.support is not None:
        gc, grad_ = g.support
        dc = float(np.linalg.norm(np.asarray(gc, float) - c))
        lo, hi = max(dc - grad_ - r, 0.0), dc + grad_ - r
        if hi <= 0:
            return 0.0, 0.0
    s_edges = _s_edges(lo, hi, g.scale)
    phi_x = math.atan2(x[1] - c[1], x[0] - c[0])
    dx = r - float(np.linalg.norm(x - c))
    base = np.concatenate([[0.0], np.geomspace(max(dx, 1e-12) * 1e-2, math.pi, 40)])
    offs = refine_uniform(base, 0.1)
    phi_edges = np.concatenate([-offs[::-1], offs[1:]]) + phi_x
    out = []
    for o in (order, order // 2 + 1):
        sn, sw = panel_rule(s_edges, o)
        pn, pw = panel_rule(phi_edges, o)
        om = np.stack([np.cos(pn), np.sin(pn)], axis=-1)
        S = np.broadcast_to(sn[:, None], (sn.size, pn.size))
        OM = np.broadcast_to(om[None, :, :], (sn.size, pn.size, 2))
        k = poisson_kernel_gap(ball, params, x, S, OM)
        z = c + (r + S)[..., None] * OM
        gv = g(z.reshape(-1, 2)).reshape(S.shape)
        jac = (r + sn)[:, None]
        out.append(float(np.einsum("i,j,ij->", sw, pw, k * gv * jac)))
    return out[0], abs(out[0] - out[1]) + 1e-15 * abs(out[0])


def solve_elliptic_kernel(domain: Domain, params: StableParams, g: ExteriorData, x,
                          order: int = 10) -> Estimate:
    """K_D g(x) by kernel quadrature, with an error estimate per point.

    Exterior panels are dyadic in the exterior distance down to 1e-8; the
    remainder below uses the local power law d_z^{-alpha/2}, and the far
    tail the decay d_z^{-1-alpha}. A PointMass gives weight * K_D(x, x0).
    """
    x = _as_points(x, params.d)
    flat = x.reshape(-1, params.d)
    if np.any(domain.signed(flat) <= 0):
        raise DomainError("x must lie in the domain")
    if isinstance(g, PointMass):
        x0 = np.asarray(g.x0, dtype=float)
        if not domain.signed(x0) < 0:
            raise DomainError("point mass must lie strictly outside the closed domain")
        v = g.weight * np.atleast_1d(poisson_kernel(domain, params, flat, x0))
        return Estimate(_squeeze(v, x), _squeeze(1e-14 * np.abs(v), x))
    if isinstance(g, TimeDependent):
        raise InputError("time-dependent data belongs to the parabolic solver")
    gf = g.g if isinstance(g, ClosedForm) else g
    if params.d == 1:
        val, err = _KernelQuadrature1D(domain, params, gf, order)(flat[:, 0])
    elif params.d == 2 and type(domain) is Ball:
        pairs = [_kernel_quadrature_2d(domain, params, gf, p, order) for p in flat]
        val = np.array([p[0] for p in pairs])
        err = np.array([p[1] for p in pairs])
    else:
        raise InputError("kernel quadrature is available for d = 1 and the d = 2 ball")
    if not np.all(np.isfinite(val)):
        raise DivergenceError("kernel quadrature did not converge")
    return Estimate(_squeeze(val, x), _squeeze(err, x))


# --- Green potential -----------------------------------------------------------


def _ray_edges(length: float, breaks: Sequence[float], width: float,
               levels: int = 44) -> Array:
    """Panels on (0, length) graded toward both ends and toward breaks."""
    grade = 0.5 ** np.arange(levels, 0, -1)
    edges = [0.5 * length * grade, length - 0.5 * length * grade, [0.5 * length]]
    for br in breaks:
        if 0 < br < length:
            edges.append([br])
    e = np.unique(np.concatenate([[0.0, length], *edges]))
    return refine_uniform(e, width)


def _green_ray(ball: Ball, params: StableParams, f: ScalarField, x: Array, w: Array,
               length: float, breaks: list[float], order: int = 10) -> tuple[float, float]:
    """int_0^length G(x, x + h w) f(x + h w) h^{d-1} dh.

    Panels are graded toward the pole (|x-y|^{alpha-d}) and the boundary
    (d_y^{alpha/2}); the innermost pole panel uses the exact power law.
    """
    d, a = params.d, params.alpha
    edges = _ray_edges(length, breaks, 0.25 * f.scale)
    eps = edges[1]

    def integrand(h):
        pts = x + h[:, None] * w
        return (green_function_offset(ball, params, x, h[:, None] * w)
                * np.asarray(f(pts), float).reshape(-1) * h ** (d - 1))

    vals = []
    for o in (order, order // 2 + 1):
        n, wt = panel_rule(edges[1:], o)
        vals.append(float(wt @ integrand(n)))
    head = float(integrand(np.array([eps]))[0]) * eps / a
    return vals[0] + head, abs(vals[0] - vals[1]) + 1e-15 * abs(vals[0])


def _boundary_exponent(ball, params, f, x: Array, side: float, length: Array) -> Array:
    """Local exponent q of G(x, y) f(y) ~ t^q as y approaches the boundary (t = d_y)."""
    t = length[:, None] * np.array([2.0 ** -36, 2.0 ** -35])
    h = side * (length[:, None] - t)
    vals = np.abs(green_function_offset(ball, params, x[:, None, None], h[..., None])
                  * np.asarray(f((x[:, None] + h)[..., None]), float).reshape(h.shape))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(vals[:, 1] / vals[:, 0]) / math.log(2.0)


def _green_potential_1d(ball: Ball, params: StableParams, f: ScalarField, x: Array,
                        order: int = 10) -> tuple[Array, Array]:
    """Vectorized d = 1 version: h = L v on one graded v-rule shared by all points."""
    a = params.alpha
    c, r = ball.center[0], ball.radius
    val = np.zeros(x.size)
    low = np.zeros(x.size)
    for side in (1.0, -1.0):
        length = (c + r - x) if side > 0 else (x - (c - r))
        width = min(0.05, 0.25 * f.scale / float(length.max()))
        edges = _ray_edges(1.0, (), width)
        q = _boundary_exponent(ball, params, f, x, side, length)
        if np.any(np.isfinite(q) & (q <= -1 + 1e-3)):
            raise IntegrabilityError("f grows too fast at the boundary for the Green potential")
        for o, acc in ((order, val), (order // 2 + 1, low)):
            v, w = panel_rule(edges[1:], o)
            h = side * length[:, None] * v[None, :]
            g = green_function_offset(ball, params, x[:, None, None], h[..., None])
            fv = np.asarray(f((x[:, None] + h)[..., None]), float).reshape(h.shape)
            acc += length * ((g * fv) @ w)
        eps = length * edges[1]
        h0 = side * eps[:, None]
        g0 = green_function_offset(ball, params, x[:, None, None], h0[..., None])[:, 0]
        head = g0 * np.asarray(f((x + h0[:, 0])[:, None]), float).reshape(-1) * eps / a
        val += head
        low += head
    return val, np.abs(val - low) + 1e-15 * np.abs(val)


def green_potential_ball(ball: Ball, params: StableParams, f: ScalarField, x,
                         n_dir: int = 64) -> Estimate:
    """int_B G_B(x, y) f(y) dy, integrating along rays from x.

    Rays carry panels graded toward the pole y = x and toward the boundary,
    so the |x-y|^{alpha-d} and d_y^{alpha/2} behaviours are resolved without
    subtraction.
    """
    if type(ball) is not Ball:
        raise InputError("the Green potential is implemented for balls")
    x = _as_points(x, params.d)
    flat = x.reshape(-1, params.d)
    if np.any(ball.signed(flat) <= 0):
        raise DomainError("x must lie in the ball")
    d = params.d
    if d == 1:
        val, err = _green_potential_1d(ball, params, f, flat[:, 0])
        return Estimate(_squeeze(val, x), _squeeze(err, x))
    if d == 2:
        phi = 2 * math.pi * np.arange(n_dir) / n_dir
        dirs = [np.array([math.cos(a), math.sin(a)]) for a in phi]
        wts = [2 * math.pi / n_dir] * n_dir
    else:
        raise InputError("Green potential available for d in {1, 2}")
    vals, errs = [], []
    for p in flat:
        v = e = 0.0
        for w, wt in zip(dirs, wts):
            length = float(ball.ray_crossings(p, w)[-1])
            br = []
            if f.support is not None:
                br = [abs(r) for r in _sphere_crossings(p, w, np.asarray(f.support[0], float),
                                                         f.support[1]) if r > 0]
            rv, re = _green_ray(ball, params, f, p, w, length, br)
            v += wt * rv
            e += wt * re
        vals.append(v)
        errs.append(e)
    v = np.array(vals)
    if not np.all(np.isfinite(v)):
        raise IntegrabilityError("f is not integrable against the Green function")
    return Estimate(_squeeze(v, x), _squeeze(np.array(errs), x))


# --- solution fields ------------------------------------------------------------


@dataclass
class SolutionField:
    """x -> (value, error) with the exterior trace built in.

    Interior points use ``evaluator``; exterior points return g exactly
    (zero for a point mass away from x0).
    """

    domain: Domain
    params: StableParams
    exterior: object
    evaluator: Callable[[Array], tuple[Array, Array]]
    provenance: str
    problem: dict = field(default_factory=dict)
    scale: float = 1.0
    support = None
    grad = None

    @property
    def d(self) -> int:
        return self.params.d

    def evaluate(self, x) -> Estimate:
        x = _as_points(x, self.d)
        flat = x.reshape(-1, self.d)
        sgn = self.domain.signed(flat)
        val = np.zeros(flat.shape[0])
        err = np.zeros(flat.shape[0])
        ins = sgn > 0
        if np.any(ins):
            v, e = self.evaluator(flat[ins])
            val[ins] = v
            err[ins] = e
        out = ~ins
        if np.any(out) and isinstance(self.exterior, ClosedForm):
            val[out] = self.exterior(flat[out]).reshape(-1)
        return Estimate(val.reshape(x.shape[:-1]), err.reshape(x.shape[:-1]))

    def __call__(self, x) -> Array:
        return self.evaluate(x).value

    def interior_field(self) -> ScalarField:
        """u 1_D as a field on R^d (zero outside D), for PV and pairing checks."""
        if not isinstance(self.domain, Ball) or type(self.domain) is not Ball:
            raise InputError("interior restriction is provided for balls")

        def func(y):
            y = _as_points(y, self.d)
            flat = y.reshape(-1, self.d)
            out = np.zeros(flat.shape[0])
            ins = self.domain.signed(flat) > 0
            if np.any(ins):
                out[ins] = self.evaluator(flat[ins])[0]
            return out.reshape(y.shape[:-1])

        return ScalarField(func, d=self.d, support=(self.domain.center, self.domain.radius),
                           scale=self.scale)

    def write_csv(self, path, xs) -> None:
        xs = _as_points(xs, self.d).reshape(-1, self.d)
        est = self.evaluate(xs)
        dist = self.domain.dist(xs)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.d)] + ["d_x", "value", "error",
                                                             "provenance"])
            for p, dd, v, e in zip(xs, dist, np.atleast_1d(est.value), np.atleast_1d(est.error)):
                w.writerow([repr(float(c)) for c in p]
                           + [repr(float(dd)), repr(float(v)), repr(float(e)), self.provenance])


def elliptic_field(domain: Domain, params: StableParams, g: ExteriorData | None,
                   f: ScalarField | None = None) -> SolutionField:
    """u = K_D g - G_D f (kernel quadrature path)."""
    quad = None
    if isinstance(g, ClosedForm) and params.d == 1:
        quad = _KernelQuadrature1D(domain, params, g.g)

    def evaluator(pts):
        val = np.zeros(pts.shape[0])
        err = np.zeros(pts.shape[0])
        if quad is not None:
            v, e = quad(pts[:, 0])
            val += v
            err += e
        elif g is not None:
            est = solve_elliptic_kernel(domain, params, g, pts)
            val += np.atleast_1d(est.value)
            err += np.atleast_1d(est.error)
        if f is not None:
            est = green_potential_ball(domain, params, f, pts)
            val -= np.atleast_1d(est.value)
            err += np.atleast_1d(est.error)
        return val, err

    scale = g.g.scale if isinstance(g, ClosedForm) else 1.0
    desc = {"problem": "elliptic", "g": _describe(g), "f": "zero" if f is None else "field"}
    return SolutionField(domain, params, g, evaluator, "kernel-quadrature", desc, scale)


def _describe(g) -> str:
    if g is None:
        return "zero"
    if isinstance(g, PointMass):
        return f"point_mass(x0={list(g.x0)}, weight={g.weight})"
    return type(g).__name__


# --- Monte Carlo solvers ---------------------------------------------------------


def derived_mc(mc: McConfig, tag: int) -> McConfig:
    """An McConfig whose seed is derived from (mc.seed, tag), for independent sub-runs."""
    seed = int(np.random.SeedSequence([int(mc.seed), int(tag)]).generate_state(1)[0])
    return McConfig(mc.paths, seed, mc.dt, mc.max_steps, mc.chunk, mc.workers)


def _default_horizon(domain: Domain, params: StableParams) -> float:
    if not domain.bounded:
        raise InputError("the f-term needs a bounded domain (exit times are heavy tailed)")
    return 40.0 * domain.radius ** params.alpha


def solve_elliptic_mc(domain: Domain, params: StableParams, g: ClosedForm | None,
                      f: ScalarField | None, x, mc: McConfig,
                      horizon: float | None = None) -> Estimate:
    """E[g(X_tau)] by walk-on-spheres minus E int_0^tau f(X_t) dt by killed paths."""
    if isinstance(g, (PointMass, TimeDependent)):
        raise InputError("the Monte Carlo path accepts closed-form exterior data only")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if domain.signed(x) <= 0:
        raise DomainError("x must lie in the domain")
    value = 0.0
    var = 0.0
    warnings = []
    if g is not None:
        batch = walk_on_spheres_mc(domain, params, x, derived_mc(mc, 1))
        if batch.censored_fraction > 1e-3:
            warnings.append(f"censored walk fraction {batch.censored_fraction:.2e} exceeds 1e-3")
        vals = g(batch.positions[batch.exited]).reshape(-1)
        value += float(vals.mean())
        var += float(vals.var(ddof=1)) / vals.size
    if f is not None:
        if mc.dt is None:
            raise InputError("the f-term needs mc.dt")
        h = _default_horizon(domain, params) if horizon is None else horizon
        batch = killed_paths_mc(domain, params, x, derived_mc(mc, 2), h, f=f)
        if batch.censored_fraction > 1e-3:
            warnings.append(f"killed-path censoring {batch.censored_fraction:.2e} exceeds 1e-3")
        value -= float(batch.integral.mean())
        var += float(batch.integral.var(ddof=1)) / len(batch)
    return Estimate(value, math.sqrt(var), warnings)


def solve_parabolic_mc(domain: Domain, params: StableParams, g: TimeDependent, t, x,
                       mc: McConfig, dts: Sequence[float] | None = None) -> Estimate:
    """u(t, x) = E[g(t - tau, X_tau); tau < t] on a grid of times t.

    With several ``dts`` each level runs independent killed paths and the
    values are extrapolated linearly in dt to dt = 0 (the exit-time bias is
    first order); the reported error propagates the per-level standard errors.
    """
    if isinstance(g, (PointMass, ClosedForm)):
        if isinstance(g, ClosedForm):
            g = TimeDependent(lambda s, z, _g=g: _g(z).reshape(np.shape(s)), 1.0)
        else:
            raise InputError("the parabolic solver accepts bounded exterior data only")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise InputError("t must be nonnegative")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if domain.signed(x) <= 0:
        raise DomainError("x must lie in the domain")
    levels = [mc.dt] if dts is None else list(dts)
    if any(v is None or not v > 0 for v in levels):
        raise InputError("parabolic Monte Carlo needs positive dt values")
    horizon = float(t.max())
    means, ses, warnings = [], [], []
    for i, dt in enumerate(levels):
        if horizon == 0:
            means.append(np.zeros_like(t))
            ses.append(np.zeros_like(t))
            continue
        cfg = derived_mc(McConfig(mc.paths, mc.seed, dt, mc.max_steps, mc.chunk, mc.workers),
                         100 + i)
        batch = killed_paths_mc(domain, params, x, cfg, horizon)
        tau = batch.times
        ex = batch.exited
        m = np.empty_like(t)
        se = np.empty_like(t)
        for j, tj in enumerate(t):
            hit = ex & (tau <= tj * (1 + 1e-12))
            vals = np.zeros(len(batch))
            if np.any(hit):
                vals[hit] = g(tj - tau[hit], batch.positions[hit]).reshape(-1)
            m[j] = vals.mean()
            se[j] = vals.std(ddof=1) / math.sqrt(vals.size) if vals.size > 1 else 0.0
        means.append(m)
        ses.append(se)
    if len(levels) == 1:
        return Estimate(_squeeze(means[0], t), _squeeze(ses[0], t), warnings)
    # linear extrapolation in dt: weights of the least-squares intercept
    h = np.asarray(levels, dtype=float)
    A = np.stack([np.ones_like(h), h], axis=-1)
    w = np.linalg.pinv(A)[0]
    M = np.stack(means)
    S = np.stack(ses)
    val = w @ M
    err = np.sqrt((w[:, None] ** 2 * S ** 2).sum(axis=0))
    return Estimate(_squeeze(val, t), _squeeze(err, t), warnings)


def parabolic_exit_cdf(domain: Domain, params: StableParams, t, x, mc: McConfig,
                       dts: Sequence[float] | None = None) -> Estimate:
    """P(tau <= t), the g = 1 solution."""
    return solve_parabolic_mc(domain, params, TimeDependent(lambda s, z: np.ones(np.shape(s))),
                              t, x, mc, dts)
