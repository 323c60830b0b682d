"""Checks of the auxiliary integral estimates used in the kernel bounds.

Each estimate is an integral inequality with an unspecified constant; the
left side is integrated numerically over a grid and compared with the right
side through a RatioReport.  Falsification probes step just outside each
hypothesis and record whether the left side blows up.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import special

from ..errors import ConfigError, DivergenceError
from ..geometry import Ball, Domain, HalfSpace
from ..quadrature import graded_edges, panel_rule, shell_integrate
from ..spaces import region_integrate
from .grids import Grids
from .ratio import Check, RatioReport, RatioRow, exponent_check

EXTERIOR_PAIRS = ((0.3, 0.8), (-0.5, 0.2), (0.0, 1.0), (0.5, 1.5), (-0.9, -0.2))
INTERIOR_PAIRS = ((0.5, 1.0), (0.0, 0.5), (-0.5, 0.5), (1.0, 1.5))
BALL_LAMBDAS = (0.0, -0.5, 0.5, 1.0)
# (alpha, nu0, nu1)
ENVELOPE_TUPLES = ((1.0, 0.5, 0.5), (1.0, -0.5, 1.0), (1.5, 1.0, -0.5), (0.5, 0.0, 1.5),
             (1.5, 0.5, 1.0), (1.0, 2.0, -1.5))


# --- left-hand sides -------------------------------------------------------


def exterior_power_integral(nu0: float, nu1: float, dx: float) -> float:
    """int over the exterior of the half-line of d_z^nu0 |x - z|^{-1-nu1}, d_x = dx."""
    f = lambda s: s ** nu0 * (dx + s) ** (-1.0 - nu1)
    return shell_integrate(f, 0.0, math.inf, pivot=dx).value


def exterior_power_exact(nu0: float, nu1: float, dx: float) -> float:
    return dx ** (nu0 - nu1) * special.beta(nu0 + 1, nu1 - nu0)


def ball_average_power(domain: Domain, lam: float, r: float) -> float:
    """Mean of d_x^lam over B_r(x0) for a boundary point x0 (d = 1, or a d = 2 ball)."""
    d = domain.d
    if d == 1:
        x0 = 0.0 if isinstance(domain, HalfSpace) else domain.c[0] + domain.radius
        total = 0.0
        for sgn in (-1.0, 1.0):
            g = lambda h: np.asarray(domain.dist((x0 + sgn * h)[:, None]), float) ** lam
            total += shell_integrate(g, 0.0, r, floor=1e-14 * max(r, 1.0)).value
        return total / (2 * r)
    if not (isinstance(domain, Ball) and d == 2):
        raise ConfigError("ball averages are implemented for d = 1 and the d = 2 ball")
    R = domain.radius
    # x - c = R e1 + rho (cos phi, sin phi); the boundary crossing is at cos phi = -rho / 2R
    crossing = math.acos(max(-1.0, -r / (2 * R)))
    e = np.concatenate([graded_edges(0.0, crossing, toward="b", levels=40)[:-1],
                        graded_edges(crossing, math.pi, toward="a", levels=40)])
    ph, wp = panel_rule(e, 10)
    cos = np.cos(ph)

    def ring(rho):
        rho = rho[:, None]
        n = np.sqrt(R * R + 2 * R * rho * cos + rho * rho)
        dist = np.abs(rho * (2 * R * cos + rho)) / (R + n)
        return 2 * rho[:, 0] * ((dist ** lam) @ wp)

    return shell_integrate(ring, 0.0, r).value / (math.pi * r * r)


def transverse_integral(x1: float, alpha: float, d: int = 2) -> float:
    """int over R^{d-1} of 1 min |x|^{-d-alpha}, x = (x1, x'), for d = 2."""
    y0 = math.sqrt(max(0.0, 1.0 - x1 * x1))
    f = lambda y: np.minimum(1.0, (x1 * x1 + y * y) ** (-(d + alpha) / 2))
    br = [y0] if y0 > 0 else []
    return 2 * shell_integrate(f, 0.0, math.inf, pivot=max(y0, x1), breakpoints=br).value


def parabolic_half_integral(t: float, dx: float, alpha: float, nu0: float, nu1: float) -> float:
    """Half-line exterior integral of the parabolic kernel bound (d = 1)."""
    tt = t ** (1 / alpha)

    def f(s):
        k = np.minimum(t ** (-1 / alpha - 1), np.abs(dx + s) ** (-1 - alpha))
        return k * np.minimum(1.0, s ** (alpha / 2) / math.sqrt(t)) ** nu0 * s ** (nu1 * alpha / 2)

    br = [tt] + ([tt - dx] if tt > dx else [])
    return shell_integrate(f, 0.0, math.inf, pivot=max(dx, tt), breakpoints=br).value


def parabolic_half_rhs(t: float, dx: float, alpha: float, nu1: float) -> float:
    return min(t ** (nu1 / 2 - 1),
               max(dx ** (nu1 * alpha / 2 - alpha), t ** (nu1 / 2 + 1 / alpha) * dx ** (-1 - alpha)))


def interior_power_integral(ball: Ball, nu0: float, nu1: float, dz: float) -> float:
    """int_D d_x^nu0 |x - z|^{-d-nu1} dx for z at distance dz outside a d = 1 ball."""
    z = ball.c[0] + ball.radius + dz
    f = lambda y, s: s ** nu0 * np.abs(y[:, 0] - z) ** (-1.0 - nu1)
    return region_integrate(f, ball, "D", pivot=min(dz, ball.radius)).value


# --- hypothesis guards ---------------------------------------------------------


def _require(ok: bool, msg: str) -> None:
    if not ok:
        raise ConfigError(msg)


def check_exterior_hypothesis(nu0, nu1):
    _require(-1 < nu0 < nu1, f"exterior power integral needs -1 < nu0 < nu1 (got {nu0}, {nu1})")


def check_envelope_hypothesis(alpha, nu0, nu1):
    _require(nu0 + nu1 > -2 / alpha and nu1 < 2 and nu1 != -2 / alpha,
             "parabolic envelope needs nu0 + nu1 > -2/alpha and 2 > nu1 != -2/alpha "
             f"(got {alpha}, {nu0}, {nu1})")


def check_ball_average_hypothesis(lam):
    _require(lam > -1, f"ball average needs lambda > -1 (got {lam})")


# --- suite -----------------------------------------------------------------------


def _probe(name: str, fn: Callable[[], float], note: str) -> Check:
    """Run a left side outside its hypotheses; blow-up is the expected outcome."""
    try:
        v = fn()
        blew = not math.isfinite(v)
        metrics = {"value": v}
    except DivergenceError as exc:
        blew, metrics = True, {"divergence": str(exc)}
    verdict = "pass" if blew else "fail"
    return Check(f"falsify: {name}", verdict, {**metrics, "blow_up": blew}, asserted=False,
                 reason=note)


def check_appendix_lemmas(domain: Domain | None = None, grids: Grids | None = None, *,
                          alpha: float = 1.0, falsify: bool = False) -> list:
    """Ratio reports for the auxiliary estimates.

    The half-line estimates (exterior power integral, parabolic envelope) run
    on the d = 1 half-space; the ball average and the interior power integral
    use ``domain`` (default the unit ball, d = 1).
    """
    domain = Ball((0.0,), 1.0) if domain is None else domain
    grids = grids or Grids()
    out: list = []
    ladder = grids.dx_ladder()

    for nu0, nu1 in EXTERIOR_PAIRS:
        check_exterior_hypothesis(nu0, nu1)
        lhs = [exterior_power_integral(nu0, nu1, x) for x in ladder]
        tag = f"exterior power integral nu0={nu0:g} nu1={nu1:g}"
        out.append(exponent_check(f"{tag} exponent", ladder, lhs, nu0 - nu1, 0.02))
        rows = [RatioRow({"d_x": float(x)}, v, x ** (nu0 - nu1)) for x, v in zip(ladder, lhs)]
        out.append(RatioReport(f"{tag} ratio", rows, "d_x", 0.02))

    if domain.d in (1, 2) and (domain.d == 1 or isinstance(domain, Ball)):
        radii = np.geomspace(1e-3, 1.0, 13) * (domain.radius if isinstance(domain, Ball) else 1.0)
        for lam in BALL_LAMBDAS:
            check_ball_average_hypothesis(lam)
            rows = [RatioRow({"r": float(r)}, ball_average_power(domain, lam, r), r ** lam)
                    for r in radii]
            out.append(RatioReport(f"ball average d={domain.d} lambda={lam:g}", rows, "r", 0.02))

    xs = np.geomspace(1e-3, 1e3, 13)
    rows = [RatioRow({"x1": float(x)}, transverse_integral(x, alpha), min(1.0, x ** (-1 - alpha)))
            for x in xs]
    out.append(RatioReport(f"transverse integral d=2 alpha={alpha:g}", rows, "x1", 0.02,
                           mode="no-growth", window=0.25))

    ts = np.geomspace(grids.t_lo, grids.t_hi, 5)
    dxs = np.geomspace(1e-4, 1e4, 17)
    for a, nu0, nu1 in ENVELOPE_TUPLES:
        check_envelope_hypothesis(a, nu0, nu1)
        rows = [RatioRow({"t": float(t), "d_x": float(x), "rho": float(x / t ** (1 / a))},
                         parabolic_half_integral(t, x, a, nu0, nu1), parabolic_half_rhs(t, x, a, nu1))
                for t in ts for x in dxs]
        out.append(RatioReport(f"parabolic envelope alpha={a:g} nu0={nu0:g} nu1={nu1:g}", rows,
                               "rho", 0.05, mode="no-growth", window=0.25))

    if isinstance(domain, Ball) and type(domain) is Ball and domain.d == 1:
        dzs = np.geomspace(1e-6, 1e3, 19)
        for nu0, nu1 in INTERIOR_PAIRS:
            _require(nu0 > -1, "interior power integral needs nu0 > -1")
            rows = [RatioRow({"d_z": float(z)}, interior_power_integral(domain, nu0, nu1, z),
                             z ** (nu0 - nu1) * (1 + z) ** (-1 - nu0)) for z in dzs]
            out.append(RatioReport(f"interior power integral nu0={nu0:g} nu1={nu1:g}", rows,
                                   "d_z", 0.02, mode="no-growth", window=0.25))

    if falsify:
        out.append(_probe("exterior power integral nu0=-1.05",
                          lambda: exterior_power_integral(-1.05, 0.5, 0.1),
                          "nu0 below -1: the integral diverges at the boundary"))
        out.append(_probe("exterior power integral nu0=nu1=0.5",
                          lambda: exterior_power_integral(0.5, 0.5, 0.1),
                          "nu0 = nu1: logarithmic divergence at infinity"))
        out.append(_probe("ball average lambda=-1", lambda: ball_average_power(domain, -1.0, 0.1),
                          "lambda = -1: d_x^lambda is not locally integrable"))
        out.append(_probe("parabolic envelope alpha=1 nu0=0 nu1=-2.2",
                          lambda: parabolic_half_integral(1.0, 0.1, 1.0, 0.0, -2.2),
                          "nu0 + nu1 < -2/alpha: divergence at the boundary"))
    return out
