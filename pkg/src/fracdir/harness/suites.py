"""Verification suites that wrap the solvers: exit laws, the point-mass
identity, boundary decay, norm equivalence, parabolic Monte Carlo and weak
residuals.

Every suite returns a list of RatioReport / Check objects.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from ..errors import ConfigError
from ..fraclap import PairingSpec, PointMass, ScalarField, distributional_pairing, fraclap_pv, smooth_bump
from ..geometry import Ball, Domain, HalfSpace, PartitionFamily
from ..kernels import StableParams, exit_cdf_1d, mean_exit_time_ball
from ..quadrature import panel_rule
from ..solvers import ClosedForm, elliptic_field, parabolic_exit_cdf, solve_elliptic_mc
from ..spaces import HolderSpec, WeightSpec, dyadic_norm, weighted_holder, weighted_sobolev_norm
from ..stochastic import McConfig, exit_times_multilevel_mc, killed_paths_mc, walk_on_spheres_mc
from .ratio import Check, RatioReport, RatioRow, exponent_check

DEFAULT_ALPHAS = (0.5, 1.0, 1.5)


def _ball_1d(domain: Domain, what: str) -> Ball:
    if not (type(domain) is Ball and domain.d == 1):
        raise ConfigError(f"{what} runs on a d = 1 ball")
    return domain


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


# --- exit law --------------------------------------------------------------


def exit_start(domain: Domain) -> np.ndarray:
    """Off-center start point: 0.3 r from the center of a ball, d_x = 1 in the half-space."""
    if isinstance(domain, HalfSpace):
        return np.array([1.0])
    return np.array([domain.c[0] + 0.3 * domain.radius])


def check_exit_law(domain: Domain, alphas, mc: McConfig, tol: float = 0.01) -> list:
    """Kolmogorov-Smirnov distance of walk-on-spheres exit positions to the exact law."""
    if domain.d != 1 or not (isinstance(domain, HalfSpace) or type(domain) is Ball):
        raise ConfigError("the exit law check runs on a d = 1 ball or half-space")
    x = exit_start(domain)
    out = []
    for a in alphas:
        params = StableParams(1, a)
        batch = walk_on_spheres_mc(domain, params, x, mc)
        z = np.sort(batch.positions[batch.exited][:, 0])
        ks = stats.kstest(z, lambda v: exit_cdf_1d(domain, params, x, v))
        ok = ks.statistic < tol and batch.censored_fraction <= 1e-3
        out.append(Check(f"exit law {type(domain).__name__} alpha={a:g}", _verdict(ok),
                         {"ks": float(ks.statistic), "p_value": float(ks.pvalue), "tol": tol,
                          "paths": int(len(batch)), "censored": float(batch.censored_fraction),
                          "x": float(x[0])},
                         reason=f"KS {ks.statistic:.4f} vs {tol}"))
    return out


# --- point-mass identity ------------------------------------------------------


def check_delta_headline(domain: Domain, alphas, tol: float = 0.02, n_points: int = 10,
                         eps: float = 0.1) -> list:
    """-Delta^{alpha/2}(K_D(., x0) 1_D)(x) against c_d |x - x0|^{-1-alpha}.

    The solution of the point-mass problem is harmonic in D, so the
    fractional Laplacian of its restriction to D is minus the exterior
    contribution, which is the kernel of the point mass itself. The same
    solution is checked for bounded weighted derivatives up to order one.
    """
    ball = _ball_1d(domain, "the point-mass identity")
    c, r = ball.c[0], ball.radius
    x0 = c + 1.5 * r
    xs = c + np.linspace(-0.85, 0.85, n_points) * r
    out = []
    for a in alphas:
        params = StableParams(1, a)
        inner = elliptic_field(ball, params, PointMass((x0,), 1.0)).interior_field()
        rows = []
        for x in xs:
            got = -fraclap_pv(inner, params, x, rtol=1e-6).value
            want = params.c_d * abs(x - x0) ** (-1 - a)
            rows.append({"x": float(x), "d_x": float(r - abs(x - c)), "value": float(got),
                         "expected": float(want), "rel_err": float(abs(got / want - 1))})
        worst = max(row["rel_err"] for row in rows)
        out.append(Check(f"point-mass identity alpha={a:g}", _verdict(worst < tol),
                         {"max_rel_err": worst, "tol": tol, "x0": x0, "points": n_points},
                         reason=f"max relative error {worst:.2e} vs {tol}", rows=rows))
        out += _delta_regularity(ball, params, eps)
    return out


def _delta_regularity(ball: Ball, params: StableParams, eps: float) -> list:
    """|psi^{-alpha/2+eps+k} D^k u| and its Holder quotient stay bounded as d_x -> 0, k = 0, 1."""
    u = elliptic_field(ball, params, PointMass((ball.c[0] + 1.5 * ball.radius,), 1.0))
    out = []
    for k in (0, 1):
        h = weighted_holder(u, ball, HolderSpec(k, 0.5, -params.alpha / 2 + eps))
        for key in ("weighted", "quotient"):
            rows = [RatioRow({"d_x": r["d_x"]}, r[key], 1.0) for r in h.ladder]
            out.append(RatioReport(
                f"point-mass solution {key} k={k} alpha={params.alpha:g} eps={eps:g}", rows,
                "d_x", 0.02, mode="no-growth", ends=("low",),
                notes="sampled over d_x in [1e-6, 1e-1]; the sup is a lower bound"))
    return out


# --- boundary decay ----------------------------------------------------------


def check_decay_rate(domain: Domain, alphas, mc: McConfig | None, *, quad_tol: float = 0.02,
                     mc_tol: float = 0.05) -> list:
    """u(x) ~ d_x^{alpha/2} as x approaches the boundary, g vanishing near it.

    Quadrature path: a bump g over d_x in [1e-4, 1e-1]. Monte Carlo path:
    walk-on-spheres with g = 1 beyond distance r/2 of the boundary.
    """
    ball = _ball_1d(domain, "the decay check")
    c, r = ball.c[0], ball.radius
    dx = np.geomspace(1e-4, 1e-1, 12) * r
    xs = c + r - dx
    out = []
    for a in alphas:
        params = StableParams(1, a)
        u = elliptic_field(ball, params, ClosedForm(smooth_bump([c + 2 * r], 0.5 * r)))
        est = u.evaluate(xs[:, None])
        out.append(exponent_check(f"decay exponent quadrature alpha={a:g}", dx, est.value, a / 2,
                                  quad_tol, extra={"g": "bump at d_z = r, radius r/2"}))
        pm = elliptic_field(ball, params, PointMass((c + 3 * r,), 1.0)).evaluate(xs[:, None])
        out.append(exponent_check(f"decay exponent point mass alpha={a:g}", dx, pm.value, a / 2,
                                  quad_tol, extra={"g": "point mass at d_x0 = 2r"}))
        if mc is None:
            continue
        far = ScalarField(lambda z, c=c, r=r: (np.abs(z[..., 0] - c) >= 1.5 * r).astype(float))
        xm = np.geomspace(1e-4, 1e-1, 8) * r
        vals, errs = [], []
        for i, s in enumerate(xm):
            e = solve_elliptic_mc(ball, params, ClosedForm(far), None, [c + r - s],
                                  McConfig(mc.paths, mc.seed + 104729 * (i + 1), None,
                                           mc.max_steps, mc.chunk, mc.workers))
            vals.append(e.value)
            errs.append(e.error)
        out.append(exponent_check(f"decay exponent Monte Carlo alpha={a:g}", xm, vals, a / 2,
                                  mc_tol, yerr=errs, stochastic=True,
                                  extra={"g": "indicator of d_z >= r/2", "paths": mc.paths}))
    return out


# --- norm equivalence --------------------------------------------------------


def norm_fields(ball: Ball) -> list[tuple[str, ScalarField]]:
    """Ten fields on a d = 1 ball: boundary powers, bumps at several depths, oscillation."""
    c, r = ball.c[0], ball.radius
    dist = lambda y: np.clip(r - np.abs(y[..., 0] - c), 0.0, None) / r
    t = lambda y: (y[..., 0] - c) / r
    out = [(f"power {k:g}", ScalarField(lambda y, k=k: dist(y) ** k * np.cos(t(y)), scale=r))
           for k in (0.5, 0.8, 1.3)]
    for cc, rr in ((0.5, 0.3), (0.9, 0.05), (0.99, 0.005), (-0.2, 0.6)):
        out.append((f"bump {cc:g}/{rr:g}", smooth_bump([c + cc * r], rr * r)))
    out.append(("weight 0.6", ScalarField(lambda y: (1 - t(y) ** 2).clip(0) ** 0.6, scale=r)))
    out.append(("linear", ScalarField(lambda y: (2 + t(y)) * (1 - t(y) ** 2).clip(0) ** 0.45,
                                      scale=r)))
    out.append(("oscillating", ScalarField(lambda y: np.sin(5 * t(y)) * (1 - t(y) ** 2).clip(0) ** 0.5,
                                           scale=r / 5)))
    return out


def check_norms(domain: Domain, *, p: float = 2.0, theta: float | None = None,
                mu: float = -0.5, tol: float = 0.02) -> list:
    """Dyadic against direct weighted norms, partition robustness, homogeneity."""
    ball = _ball_1d(domain, "the norm checks")
    theta = ball.d - 0.5 if theta is None else theta
    r = ball.radius
    P1 = PartitionFamily(ball)
    P2 = PartitionFamily(ball, 0.5, math.e ** 3)
    fields = norm_fields(ball)
    out = []
    for n in (0, 1):
        spec = WeightSpec(p, theta, 0.0, n)
        tag = f"n={n} p={p:g} theta={theta:g}"
        rows = []
        for name, f in fields:
            a = weighted_sobolev_norm(f, ball, "D", spec, mu=mu).value
            d1 = dyadic_norm(f, ball, "D", spec, P1, mu=mu).value
            d2 = dyadic_norm(f, ball, "D", spec, P2, mu=mu).value
            rows.append({"field": name, "direct": a, "dyadic": d1, "dyadic_alt": d2,
                         "ratio": d1 / a, "partition_ratio": d2 / d1})
        r1 = np.array([row["ratio"] for row in rows])
        r2 = np.array([row["partition_ratio"] for row in rows])
        ok = bool(np.all(np.isfinite(r1) & (r1 > 0)) and np.all(np.isfinite(r2) & (r2 > 0)))
        out.append(Check(f"dyadic vs direct, {len(rows)} fields {tag}", _verdict(ok),
                         {"C_max": float(r1.max()), "C_min": float(r1.min()),
                          "partition_C_max": float(r2.max()), "partition_C_min": float(r2.min())},
                         reason="every ratio finite and positive; the ladders below test uniformity",
                         rows=rows))
        ladder, robust = [], []
        for k in range(12):
            e = r * 2.0 ** -k
            f = smooth_bump([c_plus(ball, -0.55 * e)], 0.45 * e)
            a = weighted_sobolev_norm(f, ball, "D", spec, mu=mu).value
            d1 = dyadic_norm(f, ball, "D", spec, P1, mu=mu).value
            d2 = dyadic_norm(f, ball, "D", spec, P2, mu=mu).value
            ladder.append(RatioRow({"scale": e}, d1, a))
            robust.append(RatioRow({"scale": e}, d2, d1))
        out.append(RatioReport(f"dyadic/direct bump ladder {tag}", ladder, "scale", tol))
        out.append(RatioReport(f"partition robustness bump ladder {tag}", robust, "scale", tol,
                               notes="k1=0.5, k2=e^3 against k1=1, k2=e^2"))
        out.append(_homogeneity(ball, spec, P1, mu, tag))
    return out


def c_plus(ball: Ball, offset: float) -> float:
    """The point at signed offset from the right boundary point of a d = 1 ball."""
    return ball.c[0] + ball.radius + offset


def _homogeneity(ball, spec, partition, mu, tag, factors=(-2.5, 1e-3, 7.0)) -> Check:
    f = smooth_bump([c_plus(ball, -0.3 * ball.radius)], 0.25 * ball.radius)
    base_a = weighted_sobolev_norm(f, ball, "D", spec, mu=mu).value
    base_d = dyadic_norm(f, ball, "D", spec, partition, mu=mu).value
    worst = 0.0
    rows = []
    for lam in factors:
        g = ScalarField(lambda y, lam=lam: lam * f(y), d=1, support=f.support, scale=f.scale)
        a = weighted_sobolev_norm(g, ball, "D", spec, mu=mu).value
        d = dyadic_norm(g, ball, "D", spec, partition, mu=mu).value
        ea = abs(a / (abs(lam) * base_a) - 1)
        ed = abs(d / (abs(lam) * base_d) - 1)
        worst = max(worst, ea, ed)
        rows.append({"factor": lam, "direct_rel_err": ea, "dyadic_rel_err": ed})
    return Check(f"homogeneity {tag}", _verdict(worst <= 1e-12), {"max_rel_err": worst},
                 reason=f"max relative error {worst:.1e} vs 1e-12", rows=rows)


# --- parabolic -----------------------------------------------------------------


RICHARDSON_DTS = (2.0 ** -6, 2.0 ** -7, 2.0 ** -8)
BIAS_STRIDES = (1, 2, 4, 8, 16, 32)
BIAS_DT = 2.0 ** -9


def _extrapolate(levels, means, ses, order: float = 1.0):
    """Least-squares intercept of mean = a + b dt^order and its standard error."""
    h = np.asarray(levels, dtype=float) ** order
    w = np.linalg.pinv(np.column_stack([np.ones_like(h), h]))[0]
    return float(w @ np.asarray(means)), float(math.sqrt(np.sum(w ** 2 * np.asarray(ses) ** 2)))


def check_parabolic(domain: Domain, alphas, mc: McConfig,
                    asserted_bias=(0.5, 1.0)) -> list:
    """g = 1 parabolic problem: P(tau <= t) from killed paths.

    Monotonicity in t, the Richardson limit (dt in 2^-6..2^-8) at large t
    against 1 and of E[tau] against the closed form, and the first-order
    exit-time bias from coupled paths.
    """
    ball = _ball_1d(domain, "the parabolic checks")
    x = np.array(ball.c, dtype=float)
    out = []
    for a in alphas:
        params = StableParams(1, a)
        T = float(np.ravel(mean_exit_time_ball(ball, params, x[None, :]))[0])
        ts = np.concatenate([np.geomspace(1e-2, 5.0, 10) * ball.radius ** a, [20 * T]])
        est = parabolic_exit_cdf(ball, params, ts, x, mc, dts=RICHARDSON_DTS)
        v, se = np.asarray(est.value), np.asarray(est.error)
        drops = v[:-1] - v[1:] - 3 * np.hypot(se[:-1], se[1:])
        out.append(Check(f"P(tau <= t) monotone alpha={a:g}", _verdict(bool(np.all(drops <= 0))),
                         {"max_drop_beyond_3se": float(drops.max()), "values": v.tolist()},
                         rows=[{"t": float(t), "value": float(m), "stderr": float(s)}
                               for t, m, s in zip(ts, v, se)]))
        gap = abs(v[-1] - 1.0)
        out.append(Check(f"Richardson limit at t = 20 E[tau] vs 1 alpha={a:g}",
                         _verdict(gap <= 3 * se[-1] + 1e-12),
                         {"value": float(v[-1]), "stderr": float(se[-1]), "t": float(ts[-1])}))
        bias = _bias_check(ball, params, x, mc, a in asserted_bias)
        means, ses = [], []
        for i, dt in enumerate(RICHARDSON_DTS):
            cfg = McConfig(mc.paths, mc.seed + 7 * (i + 1), dt, mc.max_steps, mc.chunk, mc.workers)
            tau = killed_paths_mc(ball, params, x, cfg, 40 * T).times
            tau = np.where(np.isnan(tau), 40 * T, tau)
            means.append(tau.mean())
            ses.append(tau.std(ddof=1) / math.sqrt(tau.size))
        lim, lim_se = _extrapolate(RICHARDSON_DTS, means, ses)
        q = bias.metrics["fit"]["slope"]
        lim_q, lim_q_se = _extrapolate(RICHARDSON_DTS, means, ses, q) if q > 0 else (math.nan, math.nan)
        chk = Check(f"Richardson E[tau] vs closed form alpha={a:g}",
                    _verdict(abs(lim - T) <= 3 * lim_se),
                    {"extrapolated": lim, "stderr": lim_se, "exact": T,
                     "level_means": [float(m) for m in means],
                     "fitted_order": q, "extrapolated_fitted_order": lim_q,
                     "stderr_fitted_order": lim_q_se},
                    asserted=a in asserted_bias,
                    reason=f"|{lim:.5f} - {T:.5f}| vs 3 x {lim_se:.5f}")
        if not chk.asserted:
            chk.reason += (f"; reported only: first-order extrapolation assumes a linear bias; "
                           f"with the fitted order {q:.2f} the limit is {lim_q:.5f} +- {lim_q_se:.5f}")
        out += [chk, bias]
    return out


def _bias_check(ball, params, x, mc, asserted: bool) -> Check:
    """Bias of E[tau_dt] between consecutive grids, fitted against dt."""
    T = float(np.ravel(mean_exit_time_ball(ball, params, x[None, :]))[0])
    tm = exit_times_multilevel_mc(ball, params, x, BIAS_DT, BIAS_STRIDES, 60.0 * T,
                                  McConfig(mc.paths, mc.seed + 31, None, mc.max_steps,
                                           mc.chunk, mc.workers))
    ms = sorted(tm)
    diffs = [tm[ms[i + 1]] - tm[ms[i]] for i in range(len(ms) - 1)]
    dts = np.array([BIAS_DT * m for m in ms[1:]])
    vals = np.array([np.nanmean(dd) for dd in diffs])
    errs = np.array([np.nanstd(dd) / math.sqrt(np.sum(~np.isnan(dd))) for dd in diffs])
    chk = exponent_check(f"exit-time bias order alpha={params.alpha:g}", dts, vals, 1.0, 0.2,
                         yerr=errs, stochastic=True, asserted=asserted, min_samples=4,
                         min_decades=1.0, xname="dt",
                         extra={"estimator": "coupled differences E[tau_2dt] - E[tau_dt]"})
    if not asserted:
        chk.reason += "; reported only: the overshoot correction is not first order for alpha > 1"
    return chk


# --- weak residual -----------------------------------------------------------------


def check_weak_residual(domain: Domain, alphas, *, n_tests: int = 5, seed: int = 0,
                        tol: float = 1e-2) -> list:
    """(u, Delta^{alpha/2} phi) over R^d minus (f, phi)_D, for random interior bumps phi."""
    ball = _ball_1d(domain, "the weak residual check")
    c, r = ball.c[0], ball.radius
    rng = np.random.default_rng(seed)
    tests = []
    for _ in range(n_tests):
        cc = rng.uniform(-0.6, 0.6)
        tests.append((c + cc * r, rng.uniform(0.1, min(0.35, 0.95 - abs(cc))) * r))
    g = ClosedForm(smooth_bump([c + 2 * r], 0.6 * r))
    f = smooth_bump([c - 0.2 * r], 0.5 * r)
    out = []
    for a in alphas:
        params = StableParams(1, a)
        cases = (("exterior bump", elliptic_field(ball, params, g), g, None),
                 ("interior source", elliptic_field(ball, params, None, f), ClosedForm(
                     ScalarField(lambda z: np.zeros(z.shape[:-1]))), f))
        for label, u, ext, src in cases:
            rows = []
            for pc, pr in tests:
                phi = smooth_bump([pc], pr)
                res = distributional_pairing(PairingSpec(ball, u, ext, phi), params)
                rhs = 0.0 if src is None else _bump_inner(src, phi)
                rows.append({"phi_center": pc, "phi_radius": pr, "pairing": res.value,
                             "source_term": rhs, "residual": res.value - rhs,
                             "scale": res.scale + abs(rhs)})
            worst = max(abs(row["residual"]) / row["scale"] for row in rows)
            out.append(Check(f"weak residual {label} alpha={a:g}", _verdict(worst < tol),
                             {"max_relative_residual": worst, "tol": tol, "tests": n_tests},
                             reason=f"max |residual|/scale {worst:.1e} vs {tol}", rows=rows))
    return out


def _bump_inner(f: ScalarField, phi: ScalarField) -> float:
    c, r = phi.support
    c = float(np.ravel(c)[0])
    y, w = panel_rule(np.linspace(c - r, c + r, 33), 12)
    return float(np.sum(f(y[:, None]) * phi(y[:, None]) * w))
