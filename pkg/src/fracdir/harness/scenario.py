"""Scenario configs: schema, hypothesis guards, suite dispatch and report files."""

from __future__ import annotations

import copy
import csv
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np
import scipy

from .. import __version__
from ..errors import ConfigError, FracdirError
from ..fraclap import PointMass, ScalarField, smooth_bump
from ..geometry import Ball, Domain, HalfSpace, domain_from_dict
from ..kernels import StableParams
from ..solvers import ClosedForm, elliptic_field, solve_elliptic_mc, solve_parabolic_mc
from ..stochastic import McConfig
from . import suites as S
from .appendix import check_appendix_lemmas
from .estimates import check_hardy_rellich, check_main_estimates, check_zero_exterior, sigma_margin
from .grids import Grids
from .kernel_checks import check_kernel_bounds
from .ratio import Check, exponent_check

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_POINT = {"type": "array", "items": _NUM, "minItems": 1, "maxItems": 2}
_DATA = {
    "oneOf": [
        {"type": "null"},
        {"type": "object", "additionalProperties": False, "required": ["type", "center", "radius"],
         "properties": {"type": {"const": "bump"}, "center": _POINT,
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                        "amplitude": _NUM}},
        {"type": "object", "additionalProperties": False, "required": ["type", "x0"],
         "properties": {"type": {"const": "point_mass"}, "x0": _POINT, "weight": _NUM}},
        {"type": "object", "additionalProperties": False, "required": ["type", "value"],
         "properties": {"type": {"const": "constant"}, "value": _NUM}},
    ]
}
_ALPHA = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["domain", "params"],
    "properties": {
        "domain": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {"kind": {"enum": ["ball", "halfspace", "ball_complement"]},
                           "center": _POINT, "radius": {"type": "number", "exclusiveMinimum": 0},
                           "d": {"type": "integer", "minimum": 1, "maximum": 2}},
        },
        "params": {
            "type": "object", "additionalProperties": False, "required": ["d", "alpha"],
            "properties": {
                "d": {"type": "integer", "minimum": 1, "maximum": 2},
                "alpha": {"oneOf": [_ALPHA, {"type": "array", "items": _ALPHA, "minItems": 1}]},
                "p": {"type": "number"},
                "theta": {"type": ["number", "null"]},
                "sigma": {"type": ["number", "null"]},
            },
        },
        "problem": {
            "type": ["object", "null"], "additionalProperties": False,
            "properties": {
                "type": {"enum": ["elliptic", "parabolic"]},
                "g": _DATA, "f": _DATA,
                "x": {"type": "array", "items": _POINT},
                "t": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "method": {"enum": ["quadrature", "mc", "both"]},
            },
        },
        "suites": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
        "grids": {
            "type": "object", "additionalProperties": False,
            "properties": {"dx_base": _NUM, "dx_ratio": _NUM, "dx_count": {"type": "integer"},
                           "t_lo": _NUM, "t_hi": _NUM, "t_count": {"type": "integer"}},
        },
        "mc": {
            "type": "object", "additionalProperties": False,
            "properties": {"paths": {"type": "integer", "minimum": 1}, "seed": {"type": "integer"},
                           "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                           "max_steps": {"type": "integer", "minimum": 1},
                           "chunk": {"type": "integer", "minimum": 1},
                           "workers": {"type": ["integer", "null"], "minimum": 1}},
        },
    },
}


# --- scenario --------------------------------------------------------------------


@dataclass
class Scenario:
    domain: Domain
    d: int
    alphas: tuple[float, ...]
    p: float
    theta: float
    sigma: float | None
    problem: dict
    suites: tuple[str, ...]
    grids: Grids
    mc: McConfig
    falsify: bool = False
    violations: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def params(self, alpha: float) -> StableParams:
        return StableParams(self.d, alpha)

    def margin(self, alpha: float, default: float) -> float:
        """sigma - (-theta - alpha p / 2), or ``default`` when sigma is not set."""
        if self.sigma is None:
            return default
        return self.sigma - sigma_margin(self.theta, alpha, self.p, 0.0)


def hypothesis_violations(domain: Domain, d: int, alphas, p: float, theta: float,
                          sigma: float | None) -> list[str]:
    """Hypotheses of the weighted estimates that the parameters break."""
    out = []
    if domain.d != d:
        out.append(f"params.d = {d} differs from the domain dimension {domain.d}")
    if not p > 1:
        out.append(f"p > 1 (got p = {p})")
    if not (d - 1 < theta < d - 1 + p):
        out.append(f"theta in (d - 1, d - 1 + p) = ({d - 1:g}, {d - 1 + p:g}) (got theta = {theta:g})")
    for a in alphas:
        if not 0 < a < 2:
            out.append(f"alpha in (0, 2) (got alpha = {a:g})")
    if sigma is not None:
        if isinstance(domain, HalfSpace):
            if sigma != 0:
                out.append(f"sigma = 0 on the half-space (got sigma = {sigma:g})")
        elif domain.bounded:
            for a in alphas:
                lo = -theta - a * p / 2
                if not sigma > lo:
                    out.append(f"sigma > -theta - alpha p / 2 = {lo:g} for a bounded domain "
                               f"(got sigma = {sigma:g}, alpha = {a:g})")
    return out


def validate_config(config: dict) -> None:
    """Schema validation; raises ConfigError naming the offending entry."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        msgs = [f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
                for e in errors]
        raise ConfigError("config schema violation: " + "; ".join(msgs))


def load_scenario(config: dict | str | Path, *, command: str | None = None,
                  seed: int | None = None, paths: int | None = None,
                  falsify: bool = False) -> Scenario:
    """Validate a config (dict or JSON file) and resolve it into a Scenario.

    ``seed`` and ``paths`` override the mc section. Parameters outside the
    hypotheses raise ConfigError unless ``falsify`` is set.
    """
    if not isinstance(config, dict):
        try:
            config = json.loads(Path(config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    config = copy.deepcopy(config)
    validate_config(config)
    if seed is not None:
        config.setdefault("mc", {})["seed"] = int(seed)
    if paths is not None:
        config.setdefault("mc", {})["paths"] = int(paths)
    try:
        domain = domain_from_dict(config["domain"])
    except (KeyError, FracdirError) as exc:
        raise ConfigError(f"domain: {exc}") from None
    prm = config["params"]
    d = int(prm["d"])
    alphas = prm["alpha"] if isinstance(prm["alpha"], list) else [prm["alpha"]]
    alphas = tuple(float(a) for a in alphas)
    p = float(prm.get("p", 2.0))
    theta = prm.get("theta")
    theta = d - 0.5 if theta is None else float(theta)
    sigma = prm.get("sigma")
    sigma = None if sigma is None else float(sigma)
    violations = hypothesis_violations(domain, d, alphas, p, theta, sigma)
    if violations and not falsify:
        raise ConfigError("hypotheses violated: " + "; ".join(violations)
                          + " (rerun with --falsify to probe outside the range)")
    suites = config.get("suites") or list(COMMAND_SUITES.get(command or "", ()))
    if not suites:
        raise ConfigError("no suites selected")
    for name in suites:
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r}; known: {sorted(SUITES)}")
        ok, why = SUITES[name].supports(domain, d)
        if not ok:
            raise ConfigError(f"suite {name!r}: {why}")
    mcd = config.get("mc", {})
    try:
        grids = Grids.from_dict(config.get("grids"))
        mc = McConfig(int(mcd.get("paths", 100_000)), int(mcd.get("seed", 0)), mcd.get("dt"),
                      int(mcd.get("max_steps", 10_000)), int(mcd.get("chunk", 16_384)),
                      mcd.get("workers"))
    except FracdirError as exc:
        raise ConfigError(str(exc)) from None
    return Scenario(domain, d, alphas, p, theta, sigma, dict(config.get("problem") or {}),
                    tuple(suites), grids, mc, falsify, violations, config)


# --- problem data --------------------------------------------------------------------


def data_from_spec(spec: dict | None, d: int):
    """Build a ScalarField or PointMass from a problem data entry."""
    if spec is None:
        return None
    kind = spec["type"]
    if kind == "point_mass":
        return PointMass(tuple(spec["x0"]), float(spec.get("weight", 1.0)))
    if kind == "bump":
        if len(spec["center"]) != d:
            raise ConfigError("bump center has the wrong dimension")
        return smooth_bump(spec["center"], float(spec["radius"]), float(spec.get("amplitude", 1.0)))
    v = float(spec["value"])
    return ScalarField(lambda y, v=v: np.full(np.shape(y)[:-1], v), d=d)


def _check_placement(domain: Domain, spec: dict | None, side: int, what: str) -> None:
    if spec is None or spec["type"] == "constant":
        return
    if spec["type"] == "point_mass":
        if not domain.signed(np.array(spec["x0"], float)) < 0:
            raise ConfigError(f"{what}: the point mass must sit outside the closed domain")
        if side > 0:
            raise ConfigError(f"{what}: a point-mass source is not supported")
        return
    gap = side * float(domain.signed(np.array(spec["center"], float))) - float(spec["radius"])
    if gap < 0:
        where = "inside D" if side > 0 else "in the exterior"
        raise ConfigError(f"{what}: the bump support must lie {where}")


def _problem_points(scn: Scenario) -> np.ndarray:
    if "x" in scn.problem:
        return np.array(scn.problem["x"], dtype=float).reshape(-1, scn.d)
    dx = scn.grids.dx_ladder()
    dom = scn.domain
    pts = np.zeros((dx.size, scn.d))
    if isinstance(dom, HalfSpace):
        pts[:, 0] = dx
    else:
        pts[:] = dom.c
        pts[:, 0] = dom.c[0] + dom.radius - dx
    return pts


# --- suites ------------------------------------------------------------------------


@dataclass(frozen=True)
class Suite:
    run: Callable[[Scenario], list]
    supports: Callable[[Domain, int], tuple[bool, str]]
    summary: str


def _ball1(domain, d):
    return (type(domain) is Ball and d == 1, "needs a d = 1 ball")


def _exit_domains(domain, d):
    ok = d == 1 and (type(domain) is Ball or isinstance(domain, HalfSpace))
    return ok, "needs a d = 1 ball or half-space"


def _any(domain, d):
    return True, ""


def _appendix_domains(domain, d):
    ok = d == 1 or type(domain) is Ball
    return ok, "needs d = 1 or a d = 2 ball"


def _solve_domains(domain, d):
    ok = d == 1 and (type(domain) is Ball or isinstance(domain, HalfSpace))
    return ok, "solves run on a d = 1 ball or half-space"


def _run_main(scn: Scenario) -> list:
    out = []
    for a in scn.alphas:
        if a != 1.0:
            out.append(Check(f"main estimate alpha={a:g}", "inconclusive", {"alpha": a},
                             asserted=False, reason="skipped: integer norms need alpha = 1"))
            continue
        out += check_main_estimates(scn.domain, scn.params(a), p=scn.p, theta=scn.theta,
                                    margin=scn.margin(a, 0.05), falsify=scn.falsify)
    return out


def _run_zero(scn: Scenario) -> list:
    return [r for a in scn.alphas
            for r in check_zero_exterior(scn.domain, scn.params(a), p=scn.p, theta=scn.theta,
                                         margin=scn.margin(a, 0.5))]


def _run_hr(scn: Scenario) -> list:
    return [r for a in scn.alphas
            for r in check_hardy_rellich(scn.domain, scn.params(a), p=scn.p, theta=scn.theta,
                                         seed=scn.mc.seed)]


def _run_kernels(scn: Scenario) -> list:
    return [r for a in scn.alphas
            for r in check_kernel_bounds(scn.domain, scn.params(a), scn.grids, scn.mc)]


def _run_appendix(scn: Scenario) -> list:
    return check_appendix_lemmas(scn.domain, scn.grids, alpha=scn.alphas[0], falsify=scn.falsify)


def _run_solve_elliptic(scn: Scenario) -> list:
    prob = scn.problem
    g_spec, f_spec = prob.get("g"), prob.get("f")
    _check_placement(scn.domain, g_spec, -1, "g")
    _check_placement(scn.domain, f_spec, 1, "f")
    if f_spec is not None and not scn.domain.bounded:
        raise ConfigError("an interior source needs a bounded domain")
    g = data_from_spec(g_spec, scn.d)
    f = data_from_spec(f_spec, scn.d)
    gd = g if isinstance(g, PointMass) or g is None else ClosedForm(g)
    method = prob.get("method", "quadrature")
    xs = _problem_points(scn)
    dist = np.asarray(scn.domain.dist(xs), dtype=float)
    out = []
    for a in scn.alphas:
        params = scn.params(a)
        est = elliptic_field(scn.domain, params, gd, f).evaluate(xs)
        val, err = np.atleast_1d(est.value), np.atleast_1d(est.error)
        rows = [{"alpha": a, **{f"x{i}": float(v) for i, v in enumerate(x)}, "d_x": float(s),
                 "value": float(u), "error": float(e), "provenance": "kernel-quadrature"}
                for x, s, u, e in zip(xs, dist, val, err)]
        finite = bool(np.all(np.isfinite(val)))
        out.append(Check(f"elliptic solution alpha={a:g}", "pass" if finite else "fail",
                         {"points": int(len(xs)), "max_error": float(np.max(err))},
                         reason="values finite", rows=rows))
        decays = (g_spec is None or g_spec["type"] != "constant") and "x" not in prob
        if decays and finite and np.all(val > 0):
            try:
                out.append(exponent_check(f"boundary decay exponent alpha={a:g}", dist, val, a / 2,
                                          0.02))
            except FracdirError as exc:
                out.append(Check(f"boundary decay exponent alpha={a:g}", "inconclusive", {},
                                 asserted=False, reason=str(exc)))
        if method in ("mc", "both"):
            if isinstance(gd, PointMass):
                raise ConfigError("the Monte Carlo path needs bounded exterior data")
            mrows, worst = [], 0.0
            for i, x in enumerate(xs):
                m = solve_elliptic_mc(scn.domain, params, gd, f, x,
                                      McConfig(scn.mc.paths, scn.mc.seed + i, scn.mc.dt or 1e-3,
                                               scn.mc.max_steps, scn.mc.chunk, scn.mc.workers))
                z = abs(m.value - val[i]) / max(m.error, 1e-300)
                worst = max(worst, z)
                mrows.append({"alpha": a, "point": i, "mc": m.value, "mc_stderr": m.error,
                              "quadrature": float(val[i]), "z": z})
            limit = 3.0 + 2.0 * math.sqrt(2 * math.log(max(len(xs), 2)))
            out.append(Check(f"Monte Carlo vs quadrature alpha={a:g}",
                             "pass" if worst <= limit else "fail",
                             {"max_z": worst, "limit": limit}, rows=mrows,
                             reason=f"largest |mc - quadrature| / stderr {worst:.2f} vs {limit:.2f}"))
    return out


def _run_solve_parabolic(scn: Scenario) -> list:
    prob = scn.problem
    g_spec = prob.get("g") or {"type": "constant", "value": 1.0}
    if g_spec["type"] == "point_mass":
        raise ConfigError("the parabolic solver needs bounded exterior data")
    _check_placement(scn.domain, g_spec, -1, "g")
    if not scn.domain.bounded:
        raise ConfigError("the parabolic solver runs on a bounded domain")
    g = data_from_spec(g_spec, scn.d)
    bound = abs(float(g_spec.get("value", g_spec.get("amplitude", 1.0))))
    ts = np.array(prob["t"], float) if "t" in prob else scn.grids.t_grid()
    xs = np.array(prob["x"], float).reshape(-1, scn.d) if "x" in prob else scn.domain.c[None, :]
    dts = [scn.mc.dt] if scn.mc.dt else list(S.RICHARDSON_DTS)
    out = []
    for a in scn.alphas:
        params = scn.params(a)
        rows, worst = [], -math.inf
        for i, x in enumerate(xs):
            est = solve_parabolic_mc(scn.domain, params, ClosedForm(g), ts, x,
                                     McConfig(scn.mc.paths, scn.mc.seed + i, None,
                                              scn.mc.max_steps, scn.mc.chunk, scn.mc.workers),
                                     dts=dts)
            v, se = np.atleast_1d(est.value), np.atleast_1d(est.error)
            worst = max(worst, float(np.max(np.abs(v) - bound - 3 * se)))
            rows += [{"alpha": a, **{f"x{k}": float(c) for k, c in enumerate(x)}, "t": float(t),
                      "value": float(m), "stderr": float(s), "dts": json.dumps(dts)}
                     for t, m, s in zip(ts, v, se)]
        out.append(Check(f"parabolic solution alpha={a:g}", "pass" if worst <= 0 else "fail",
                         {"sup_g": bound, "max_excess_over_3se": worst}, rows=rows,
                         reason="|u| <= sup |g| within 3 stderr"))
    return out


SUITES: dict[str, Suite] = {
    "exit-law": Suite(lambda s: S.check_exit_law(s.domain, s.alphas, s.mc), _exit_domains,
                      "walk-on-spheres exit law against the closed form (KS)"),
    "delta": Suite(lambda s: S.check_delta_headline(s.domain, s.alphas), _ball1,
                   "point-mass identity and weighted regularity of its solution"),
    "decay": Suite(lambda s: S.check_decay_rate(s.domain, s.alphas, s.mc), _ball1,
                   "boundary decay exponent alpha/2, quadrature and Monte Carlo"),
    "kernel-bounds": Suite(_run_kernels, _any, "Poisson kernel, heat kernel, p_D and Q_D bounds"),
    "main-estimates": Suite(_run_main, _ball1, "main elliptic estimate over a data family"),
    "zero-exterior": Suite(_run_zero, _ball1, "zero-exterior estimate for K_D g"),
    "appendix": Suite(_run_appendix, _appendix_domains, "auxiliary integral estimates"),
    "norms": Suite(lambda s: S.check_norms(s.domain, p=s.p, theta=s.theta), _ball1,
                   "dyadic and direct weighted norms"),
    "hardy-rellich": Suite(_run_hr, _ball1, "Hardy-Rellich inequality over bumps"),
    "parabolic": Suite(lambda s: S.check_parabolic(s.domain, s.alphas, s.mc), _ball1,
                       "killed-path parabolic representation"),
    "weak-residual": Suite(lambda s: S.check_weak_residual(s.domain, s.alphas, seed=s.mc.seed),
                           _ball1, "distributional residual of solved fields"),
    "solve-elliptic": Suite(_run_solve_elliptic, _solve_domains, "solve the elliptic problem"),
    "solve-parabolic": Suite(_run_solve_parabolic, _solve_domains, "solve the parabolic problem"),
}

COMMAND_SUITES = {
    "solve-elliptic": ("solve-elliptic",),
    "solve-parabolic": ("solve-parabolic",),
    "verify-kernels": ("exit-law", "delta", "decay", "kernel-bounds"),
    "verify-estimates": ("main-estimates", "zero-exterior", "hardy-rellich", "parabolic",
                         "weak-residual"),
    "verify-appendix": ("appendix",),
    "norms": ("norms",),
}


# --- reports -------------------------------------------------------------------------


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


@dataclass
class SuiteResult:
    name: str
    checks: list
    seconds: float

    @property
    def verdict(self) -> str:
        asserted = [c for c in self.checks if c.asserted]
        if not asserted:
            return "reported"
        if all(c.verdict == "pass" for c in asserted):
            return "pass"
        return "fail" if any(c.verdict == "fail" for c in asserted) else "inconclusive"


def run_suites(scn: Scenario) -> list[SuiteResult]:
    """Run the selected suites in order; errors inside a suite become failing checks."""
    results = []
    for name in scn.suites:
        t0 = time.perf_counter()
        try:
            checks = list(SUITES[name].run(scn))
        except ConfigError:
            raise
        except FracdirError as exc:
            checks = [Check(f"{name} error", "fail", {"error": type(exc).__name__},
                            reason=str(exc))]
        if scn.violations:
            for c in checks:
                c.asserted = False
        results.append(SuiteResult(name, checks, time.perf_counter() - t0))
    return results


def build_report(scn: Scenario, results: list[SuiteResult], command: str | None) -> dict:
    failed = [f"{r.name}: {c.name}" for r in results for c in r.checks
              if c.asserted and c.verdict != "pass"]
    n_asserted = sum(c.asserted for r in results for c in r.checks)
    verdicts = {
        "overall": "pass" if not failed else "fail",
        "asserted": n_asserted,
        "not_passed": failed,
        "suites": {r.name: {"verdict": r.verdict,
                            "checks": [{"name": c.name, "verdict": c.verdict,
                                        "asserted": c.asserted} for c in r.checks]}
                   for r in results},
    }
    return jsonable({
        "schema": "fracdir-report",
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": scn.config,
        "hypotheses": {"violations": scn.violations, "falsify": scn.falsify},
        "verdicts": verdicts,
        "suites": {r.name: {"csv": f"{r.name}.csv", "checks": [c.to_dict() for c in r.checks]}
                   for r in results},
        "timing": {"suites": {r.name: r.seconds for r in results},
                   "total": sum(r.seconds for r in results)},
        "environment": {"fracdir": __version__, "numpy": np.__version__,
                        "scipy": scipy.__version__, "python": platform.python_version()},
    })


def _csv_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(jsonable(v))
    return v


def write_suite_csv(path: Path, checks: list) -> None:
    rows = [row for c in checks for row in c.csv_rows()]
    keys: list[str] = ["check"]
    for row in rows:
        keys += [k for k in row if k not in keys]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, restval="")
        w.writeheader()
        for row in rows:
            w.writerow({k: _csv_value(v) for k, v in row.items()})


def verdict_bytes(report: dict) -> bytes:
    """Canonical bytes of the verdict section, for determinism checks."""
    return json.dumps(report["verdicts"], sort_keys=True).encode()


def run_scenario(config, out_dir: str | Path = "fracdir-out", *, command: str | None = None,
                 seed: int | None = None, paths: int | None = None,
                 falsify: bool = False) -> dict:
    """Validate, run the suites, write report.json and one CSV per suite; return the report."""
    scn = load_scenario(config, command=command, seed=seed, paths=paths, falsify=falsify)
    results = run_suites(scn)
    report = build_report(scn, results, command)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r in results:
        write_suite_csv(out / f"{r.name}.csv", r.checks)
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report
