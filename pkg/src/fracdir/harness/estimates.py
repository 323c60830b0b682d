"""Weighted estimates for solutions: the main elliptic estimate, the
zero-exterior estimate and the Hardy-Rellich inequality."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, DivergenceError, IntegrabilityError
from ..fraclap import PointMass, fraclap_field, smooth_bump
from ..geometry import Ball, PartitionFamily
from ..kernels import StableParams
from ..solvers import ClosedForm, elliptic_field
from ..spaces import WeightSpec, point_mass_norm, weighted_lp_norm, weighted_sobolev_norm
from .ratio import Check, RatioReport, RatioRow

DILATIONS = tuple(2.0 ** -k for k in range(7))
POINT_MASS_DISTANCES = tuple(np.geomspace(0.1, 10.0, 6))


def sigma_margin(theta: float, alpha: float, p: float, margin: float) -> float:
    """sigma = -theta - alpha p / 2 + margin; margin > 0 is inside the hypothesis."""
    return -theta - alpha * p / 2 + margin


def _unit_ball_1d(domain) -> Ball:
    if not (type(domain) is Ball and domain.d == 1):
        raise ConfigError("weighted estimate checks run on a d = 1 ball")
    return domain


def _outer(ball: Ball, dist: float) -> float:
    return ball.c[0] + ball.radius + dist


def _inner(ball: Ball, dist: float) -> float:
    return ball.c[0] + ball.radius - dist


def _rows(name, members, notes):
    rows, excluded = [], []
    for inputs, fn in members:
        try:
            lhs, rhs, err = fn()
        except (DivergenceError, IntegrabilityError) as exc:
            excluded.append({**inputs, "reason": str(exc)})
            continue
        rows.append(RatioRow(inputs, lhs, rhs, err))
    if excluded:
        notes = f"{notes} excluded: {excluded}".strip()
    return rows, notes


def _report(name, rows, trend_var, tol, notes, **kw):
    """RatioReport, or a failing Check when every member diverged."""
    if not rows:
        return Check(name, "fail", {"members": 0}, reason=f"no finite member; {notes}")
    return RatioReport(name, rows, trend_var, tol, notes=notes, **kw)


def check_main_estimates(domain, params: StableParams, *, p: float = 2.0,
                         theta: float | None = None, margin: float = 0.05,
                         falsify: bool = False) -> list:
    """Solution norm ||psi^{-alpha/2} u||_{H^1_{p,theta}(D)} against the data norms.

    Family: exterior bumps g at scales 2^0..2^-6 (f = 0), interior bumps f
    at the same scales (g = 0) and point masses delta_{x0}, d_{x0} in
    [0.1, 10]. Each subfamily gets its own ratio report (the data norms differ:
    L_{p,theta,sigma} for bumps, the order -1 dyadic norm for point masses).
    """
    ball = _unit_ball_1d(domain)
    if params.alpha != 1.0:
        raise ConfigError("the main estimate is checked with integer norms, which needs alpha = 1")
    a = params.alpha
    theta = ball.d - 0.5 if theta is None else theta
    sigma = sigma_margin(theta, a, p, margin)
    lhs_spec = WeightSpec(p, theta, 0.0, 1)
    out: list = []

    def solution_norm(u):
        r = weighted_sobolev_norm(u, ball, "D", lhs_spec, mu=-a / 2)
        return r.value, r.error

    def ext_member(e):
        g = smooth_bump([_outer(ball, 0.55 * e)], 0.45 * e)

        def fn():
            v, err = solution_norm(elliptic_field(ball, params, ClosedForm(g)))
            rhs = weighted_lp_norm(g, ball, "Dc", WeightSpec(p, theta, sigma), mu=-a / 2).value
            return v, rhs, err
        return {"scale": e}, fn

    def int_member(e, th=theta):
        f = smooth_bump([_inner(ball, 0.55 * e)], 0.45 * e)

        def fn():
            r = weighted_sobolev_norm(elliptic_field(ball, params, None, f), ball, "D",
                                      WeightSpec(p, th, 0.0, 1), mu=-a / 2)
            rhs = weighted_lp_norm(f, ball, "D", WeightSpec(p, th), mu=a / 2).value
            return r.value, rhs, r.error
        return {"scale": e}, fn

    ext_part = PartitionFamily(ball, side=-1)

    def pm_member(d0):
        def fn():
            x0 = _outer(ball, d0)
            v, err = solution_norm(elliptic_field(ball, params, PointMass((x0,), 1.0)))
            rhs = point_mass_norm([x0], 1.0, ball, WeightSpec(p, theta, sigma), ext_part,
                                  lam=-1.0, mu=-a / 2).value
            return v, rhs, err
        return {"d_x0": float(d0)}, fn

    tag = f"p={p:g} theta={theta:g} sigma={sigma:g}"
    rows, notes = _rows("g", [ext_member(e) for e in DILATIONS], "")
    out.append(_report(f"main estimate exterior bumps {tag}", rows, "scale", 0.05, notes,
                       mode="no-growth", ends=("low",)))
    rows, notes = _rows("f", [int_member(e) for e in DILATIONS], "")
    out.append(_report(f"main estimate interior bumps {tag}", rows, "scale", 0.05, notes,
                       mode="no-growth", ends=("low",)))
    rows, notes = _rows("delta", [pm_member(d) for d in POINT_MASS_DISTANCES],
                        "data norm: order -1 dyadic norm of the point mass")
    out.append(_report(f"main estimate point masses {tag}", rows, "d_x0", 0.05, notes,
                       mode="no-growth"))
    ratios = np.concatenate([r.ratios for r in out if isinstance(r, RatioReport)] + [[np.nan]])
    ratios = ratios[np.isfinite(ratios)]
    n = int(ratios.size)
    if not n:
        ratios = np.array([np.nan])
    ok = all(r.passed for r in out)
    out.append(Check(f"main estimate family of {n}", "pass" if ok else "fail",
                     {"C_max": float(ratios.max()), "C_min": float(ratios.min()),
                      "members": n,
                      "subfamily_C": {r.name: getattr(r, "C", None) for r in out}}))
    if falsify:
        out.append(_theta_probe(ball, params, p, int_member))
    return out


def _theta_probe(ball, params, p, int_member) -> Check:
    """theta = d - 1 sits on the edge of the admissible range."""
    th = ball.d - 1.0
    vals, diverged = [], []
    for e in DILATIONS:
        inputs, fn = int_member(e, th)
        try:
            lhs, rhs, _ = fn()
            vals.append((e, lhs / rhs))
        except (DivergenceError, IntegrabilityError) as exc:
            diverged.append({"scale": e, "reason": str(exc)})
    slope = None
    if len(vals) >= 3:
        x, y = np.array(vals).T
        slope = float(np.polyfit(np.log(x), np.log(y), 1)[0])
    blew = bool(diverged) or (slope is not None and slope < -0.05)
    return Check(f"falsify: main estimate at theta = d - 1 = {th:g}", "pass" if blew else "fail",
                 {"ratios": vals, "diverged": diverged, "slope": slope}, asserted=False,
                 reason="outside the admissible theta range the solution norm is infinite "
                        "or the ratio grows along the bump ladder")


def check_zero_exterior(domain, params: StableParams, *, p: float = 2.0,
                        theta: float | None = None, margin: float = 0.5) -> list:
    """||psi^{-alpha/2} K_D g||_{L_{p,theta}(D)} / ||psi^{-alpha/2} g||_{L_{p,theta,sigma}}."""
    ball = _unit_ball_1d(domain)
    a = params.alpha
    theta = ball.d - 0.5 if theta is None else theta
    sigma = sigma_margin(theta, a, p, margin)
    members = []
    for dz in np.geomspace(1e-3, 1e3, 7):
        g = smooth_bump([_outer(ball, dz)], 0.8 * dz)

        def fn(g=g):
            r = weighted_lp_norm(elliptic_field(ball, params, ClosedForm(g)), ball, "D",
                                 WeightSpec(p, theta), mu=-a / 2)
            rhs = weighted_lp_norm(g, ball, "Dc", WeightSpec(p, theta, sigma), mu=-a / 2).value
            return r.value, rhs, r.error
        members.append(({"d_z": float(dz)}, fn))
    rows, notes = _rows("g", members, "")
    return [_report(f"zero-exterior estimate alpha={a:g} theta={theta:g} sigma={sigma:g}",
                    rows, "d_z", 0.05, notes, mode="no-growth")]


def _hr_row(ball, params, p, theta, c, r):
    a = params.alpha
    u = smooth_bump([c], r)
    lap = fraclap_field(u, params)
    lhs = weighted_lp_norm(u, ball, "D", WeightSpec(p, theta), mu=-a / 2)
    brk = [float(v) for v in ball.dist(np.array([[c - r], [c + r]]))]
    rhs = weighted_lp_norm(lap, ball, "D", WeightSpec(p, theta), mu=a / 2, s_breaks=brk)
    return lhs.value, rhs.value, lhs.error


def check_hardy_rellich(domain, params: StableParams, *, p: float = 2.0,
                        theta: float | None = None, n_random: int = 13, seed: int = 0) -> list:
    """int psi^{theta-d-alpha p/2}|u|^p <= C int psi^{theta-d+alpha p/2}|Delta^{alpha/2} u|^p.

    Bumps approach the boundary at distances 2^-k (k = 0..6) plus random
    centers and radii; a separate dilation ladder about a boundary point
    checks scale invariance.
    """
    ball = _unit_ball_1d(domain)
    theta = ball.d - 0.5 if theta is None else theta
    R = ball.radius
    rng = np.random.default_rng(seed)
    bumps = [(_inner(ball, R * 2.0 ** -k), 0.5 * R * 2.0 ** -k) for k in range(7)]
    for _ in range(n_random):
        dist = R * 10 ** rng.uniform(-2.5, 0)
        c = _inner(ball, dist) if rng.random() < 0.5 else ball.c[0] - (R - dist)
        bumps.append((c, dist * rng.uniform(0.2, 0.9)))
    rows = []
    for c, r in bumps:
        lhs, rhs, err = _hr_row(ball, params, p, theta, c, r)
        dc = float(ball.dist(np.array([[c]])).item())
        rows.append(RatioRow({"center": float(c), "radius": float(r), "d_center": dc,
                              "fill": r / dc, "gap": 1 - r / dc}, lhs, rhs, err))
    tag = f"alpha={params.alpha:g} p={p:g} theta={theta:g}"
    # the ratio depends on the bump shape r/d_center; the trend in d_center is
    # fitted with the shape held fixed
    out = [RatioReport(f"Hardy-Rellich {len(rows)} bumps {tag}", rows, "d_center", 0.05,
                       covariates=("fill", "gap"),
                       notes="trend in d_center with log(r/d), log(1-r/d) as covariates")]
    ladder = []
    for j in range(6):
        lam = 2.0 ** -j
        c, r = _inner(ball, 0.5 * R * lam), 0.25 * R * lam
        lhs, rhs, err = _hr_row(ball, params, p, theta, c, r)
        ladder.append(RatioRow({"dilation": lam}, lhs, rhs, err))
    out.append(RatioReport(f"Hardy-Rellich dilation ladder {tag}", ladder, "dilation", 0.1))
    return out
