"""Log-log exponent fits and ratio reports.

An inequality ``lhs <= C rhs`` with an unknown constant is checked by
forming lhs/rhs over a grid: the largest ratio is the fitted C and the
log-log trend of the ratio must stay within a tolerance band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from ..errors import InputError, InsufficientRangeError

Array = np.ndarray

VERDICTS = ("pass", "fail", "inconclusive")
MODES = ("flat", "two-sided", "no-growth")


@dataclass(frozen=True)
class LogLogFit:
    """log y = intercept + slope log x with a confidence interval on the slope."""

    slope: float
    intercept: float
    ci: tuple[float, float]
    stderr: float
    n: int
    decades: float

    def __iter__(self):
        return iter((self.slope, self.intercept, self.ci))

    @property
    def halfwidth(self) -> float:
        return 0.5 * (self.ci[1] - self.ci[0])

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "ci": list(self.ci),
                "stderr": self.stderr, "n": self.n, "decades": self.decades}


def loglog_fit(x, y, yerr=None, level: float = 0.95, covariates=None) -> LogLogFit:
    """Weighted least squares on (log x, log y).

    ``covariates`` (n, k) positive values enter as extra log regressors, so
    the slope is the partial trend with those nuisance variables held fixed.
    With per-point errors the weights are (y/yerr)^2 and the covariance is
    inflated by the reduced chi-square when that exceeds one; without them the
    residual scatter sets the interval (Student t).
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InputError("x and y differ in length")
    if x.size < 2:
        raise InsufficientRangeError("need at least two samples")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise InputError("log-log fit needs finite positive values")
    if np.any(~(x > 0)):
        raise InputError("log-log fit needs positive abscissae")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise InsufficientRangeError("abscissae do not vary")
    X = np.column_stack([np.ones_like(lx), lx])
    if covariates is not None:
        Z = np.asarray(covariates, dtype=float).reshape(x.size, -1)
        if np.any(~(Z > 0)):
            raise InputError("covariates must be positive")
        X = np.column_stack([X, np.log(Z)])
    dof = x.size - X.shape[1]
    if yerr is not None:
        rel = np.asarray(yerr, dtype=float).ravel() / y
        rel = np.maximum(rel, 1e-12)
        w = rel ** -2.0
    else:
        w = np.ones_like(lx)
    A = X.T @ (w[:, None] * X)
    beta = np.linalg.solve(A, X.T @ (w * ly))
    resid = ly - X @ beta
    chi2 = float(np.sum(w * resid ** 2))
    cov = np.linalg.inv(A)
    if yerr is not None:
        if dof > 0:
            cov = cov * max(1.0, chi2 / dof)
        q = stats.norm.ppf(0.5 + level / 2)
    else:
        if dof > 0:
            cov = cov * chi2 / dof
            q = stats.t.ppf(0.5 + level / 2, dof)
        else:
            cov = cov * np.inf
            q = 1.0
    se = float(math.sqrt(cov[1, 1])) if np.isfinite(cov[1, 1]) else math.inf
    slope = float(beta[1])
    ci = (slope - q * se, slope + q * se) if math.isfinite(se) else (-math.inf, math.inf)
    return LogLogFit(slope, float(beta[0]), (float(ci[0]), float(ci[1])), se, int(x.size),
                     float(np.ptp(lx) / math.log(10)))


def fit_decay_exponent(samples, errors=None, *, min_samples: int = 8,
                       min_decades: float = 3.0, level: float = 0.95) -> LogLogFit:
    """Fit value ~ C d_x^slope from (d_x, value) pairs.

    Requires ``min_samples`` points spanning ``min_decades`` decades of d_x.
    Unpacks as (slope, intercept, ci).
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError("samples must be (d_x, value) pairs")
    dx, v = arr[:, 0], arr[:, 1]
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise InputError("decay fit needs positive values")
    if np.any(~(dx > 0)):
        raise InputError("d_x samples must be positive")
    if dx.size < min_samples:
        raise InsufficientRangeError(f"{dx.size} samples, need {min_samples}")
    decades = math.log10(dx.max() / dx.min())
    if decades < min_decades - 1e-9:
        raise InsufficientRangeError(f"samples span {decades:.2f} decades, need {min_decades}")
    return loglog_fit(dx, v, errors, level)


@dataclass
class RatioRow:
    inputs: dict
    lhs: float
    rhs: float
    lhs_err: float = 0.0

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs

    def to_dict(self) -> dict:
        return {**self.inputs, "lhs": self.lhs, "lhs_err": self.lhs_err, "rhs": self.rhs,
                "ratio": self.ratio}


def _band(mode: str, end: str | None, expected: float, tol: float) -> tuple[float, float]:
    if mode == "no-growth":
        # the ratio may fall toward a limiting end, never rise
        return (expected - tol, math.inf) if end == "low" else (-math.inf, expected + tol)
    return expected - tol, expected + tol


def _judge(fit: LogLogFit, band: tuple[float, float], tol: float, stochastic: bool) -> str:
    lo, hi = band
    inside = lo <= fit.slope <= hi
    if not stochastic:
        return "pass" if inside else "fail"
    if fit.ci[1] < lo or fit.ci[0] > hi:
        return "fail"
    if inside and fit.halfwidth <= tol:
        return "pass"
    return "inconclusive"


@dataclass
class RatioReport:
    """lhs/rhs over a grid: fitted constant, trend slope with CI and a verdict.

    mode "flat": the slope over the whole grid lies within ``expected +- tol``.
    mode "two-sided": the same band is required on each end window.
    mode "no-growth": on each end window in ``ends`` the ratio must not grow
    toward that end by more than ``tol`` (it may fall).
    End windows hold the outer ``window`` fraction of the rows, or with
    ``window_at`` = {"low": v} the rows with trend variable <= v (">= v" for
    "high").
    Stochastic reports use the CI: disjoint from the band is a fail, a CI
    wider than the tolerance is inconclusive.
    ``covariates`` names inputs held fixed in the trend fit (e.g. a shape
    parameter of randomly drawn members).
    """

    name: str
    rows: list[RatioRow]
    trend_var: str
    tol: float
    mode: str = "flat"
    expected: float = 0.0
    ends: tuple[str, ...] = ("low", "high")
    window: float = 0.5
    window_at: dict | None = None
    stochastic: bool = False
    asserted: bool = True
    notes: str = ""
    covariates: tuple[str, ...] = ()
    fit: LogLogFit | None = field(init=False, default=None)
    windows: dict = field(init=False, default_factory=dict)
    verdict: str = field(init=False, default="fail")
    reason: str = field(init=False, default="")

    def __post_init__(self):
        if self.mode not in MODES:
            raise InputError(f"unknown mode {self.mode!r}")
        if not self.rows:
            raise InputError("empty ratio grid")
        for r in self.rows:
            if not r.rhs > 0:
                raise InputError(f"{self.name}: rhs must be positive (got {r.rhs} at {r.inputs})")
        self._evaluate()

    @property
    def ratios(self) -> Array:
        return np.array([r.ratio for r in self.rows])

    @property
    def C(self) -> float:
        return float(np.max(self.ratios))

    @property
    def C_min(self) -> float:
        return float(np.min(self.ratios))

    def _fit(self, rows: Sequence[RatioRow]) -> LogLogFit:
        x = [r.inputs[self.trend_var] for r in rows]
        y = [r.ratio for r in rows]
        err = None
        if self.stochastic:
            err = [max(r.lhs_err, 1e-300) / r.rhs for r in rows]
        cov = None
        if self.covariates:
            cov = [[r.inputs[c] for c in self.covariates] for r in rows]
        return loglog_fit(x, y, err, covariates=cov)

    def _evaluate(self) -> None:
        ratios = self.ratios
        if np.any(~np.isfinite(ratios)):
            self.verdict, self.reason = "fail", "non-finite ratio"
            return
        # u = 0 gives 0 <= 0 and carries no information
        live = sorted((r for r in self.rows if r.lhs > 0), key=lambda r: r.inputs[self.trend_var])
        if len(live) < 3:
            self.verdict, self.reason = "fail", "fewer than 3 nonzero rows"
            return
        self.fit = self._fit(live)
        if self.mode == "flat":
            judged = {"all": (self.fit, _band("flat", None, self.expected, self.tol))}
        else:
            k = max(3, int(math.ceil(self.window * len(live))))
            judged = {}
            for end in self.ends:
                part = live[:k] if end == "low" else live[-k:]
                if self.window_at and end in self.window_at:
                    v = self.window_at[end]
                    key = lambda r: r.inputs[self.trend_var]
                    part = [r for r in live if (key(r) <= v if end == "low" else key(r) >= v)]
                    if len(part) < 3:
                        part = live[:3] if end == "low" else live[-3:]
                judged[end] = (self._fit(part), _band(self.mode, end, self.expected, self.tol))
        self.windows = {e: f for e, (f, _) in judged.items()}
        outcomes = {e: _judge(f, b, self.tol, self.stochastic) for e, (f, b) in judged.items()}
        if "fail" in outcomes.values():
            self.verdict = "fail"
        elif "inconclusive" in outcomes.values():
            self.verdict = "inconclusive"
        else:
            self.verdict = "pass"
        self.reason = "; ".join(
            f"{e}: slope {judged[e][0].slope:+.4f} in [{judged[e][1][0]:+.3g}, "
            f"{judged[e][1][1]:+.3g}] -> {o}" for e, o in outcomes.items())

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "name": self.name, "kind": "ratio", "asserted": self.asserted,
            "verdict": self.verdict, "reason": self.reason, "mode": self.mode,
            "trend_var": self.trend_var, "expected_slope": self.expected, "tol": self.tol,
            "stochastic": self.stochastic, "C": self.C, "C_min": self.C_min,
            "slope": None if self.fit is None else self.fit.slope,
            "slope_ci": None if self.fit is None else list(self.fit.ci),
            "windows": {e: f.to_dict() for e, f in self.windows.items()},
            "n_rows": len(self.rows), "covariates": list(self.covariates),
            "notes": self.notes,
        }

    def csv_rows(self) -> list[dict]:
        return [{"check": self.name, **r.to_dict()} for r in self.rows]


@dataclass
class Check:
    """A non-ratio check: named metrics, a verdict and optional data rows."""

    name: str
    verdict: str
    metrics: dict
    asserted: bool = True
    reason: str = ""
    rows: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise InputError(f"unknown verdict {self.verdict!r}")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": "check", "asserted": self.asserted,
                "verdict": self.verdict, "reason": self.reason, "metrics": self.metrics}

    def csv_rows(self) -> list[dict]:
        return [{"check": self.name, **r} for r in self.rows]


def exponent_check(name: str, x: Iterable[float], y: Iterable[float], expected: float,
                   tol: float, yerr=None, *, asserted: bool = True, stochastic: bool = False,
                   min_samples: int = 8, min_decades: float = 3.0, extra: dict | None = None,
                   xname: str = "d_x") -> Check:
    """Fit y ~ x^slope and compare with ``expected +- tol``."""
    x = np.asarray(list(x), dtype=float)
    y = np.asarray(list(y), dtype=float)
    fit = fit_decay_exponent(np.column_stack([x, y]), yerr, min_samples=min_samples,
                             min_decades=min_decades)
    verdict = _judge(fit, (expected - tol, expected + tol), tol, stochastic)
    rows = [{xname: float(a), "value": float(b),
             **({} if yerr is None else {"error": float(e)})}
            for a, b, e in zip(x, y, yerr if yerr is not None else x)]
    metrics = {"fit": fit.to_dict(), "expected": expected, "tol": tol, **(extra or {})}
    reason = f"slope {fit.slope:+.4f} (CI {fit.ci[0]:+.4f}, {fit.ci[1]:+.4f}) vs {expected:+.4f} +- {tol}"
    return Check(name, verdict, metrics, asserted, reason, rows)
