"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are also collected
in the "acceptance criteria" section of the terminal summary.
"""

import os
import time

from fracdir.geometry import Ball, HalfSpace
from fracdir.harness import (check_appendix_lemmas, check_decay_rate,
                             check_delta_headline, check_exit_law, check_hardy_rellich,
                             check_kernel_bounds, check_main_estimates, check_norms,
                             check_parabolic, check_weak_residual, check_zero_exterior)
from fracdir.harness.ratio import Check, RatioReport
from fracdir.harness.scenario import run_scenario, verdict_bytes
from fracdir.harness.suites import DEFAULT_ALPHAS
from fracdir.kernels import StableParams
from fracdir.stochastic import McConfig

BALL = Ball((0.0,), 1.0)
PATHS = 100_000


def _mc(seed=0, paths=PATHS):
    return McConfig(paths=paths, seed=seed)


def test_criterion_01_exit_law(criterion):
    checks = (check_exit_law(BALL, DEFAULT_ALPHAS, _mc(1))
              + check_exit_law(HalfSpace(1), DEFAULT_ALPHAS, _mc(2)))
    ks = max(c.metrics["ks"] for c in checks)
    criterion(1, "walk-on-spheres exit law, KS < 0.01 at 1e5 paths, ball and half-line",
              checks, f"; max KS {ks:.4f}")


def test_criterion_02_point_mass_identity(criterion):
    checks = check_delta_headline(BALL, DEFAULT_ALPHAS)
    worst = max(c.metrics["max_rel_err"] for c in checks if "identity" in c.name)
    criterion(2, "point-mass data: Delta^{alpha/2} u = c_d |x - x0|^{-1-alpha}, rel err < 2%",
              checks, f"; max rel err {worst:.2e}")


def test_criterion_03_decay_rate(criterion):
    checks = check_decay_rate(BALL, DEFAULT_ALPHAS, _mc(3))
    dev = max(abs(c.metrics["fit"]["slope"] - c.metrics["expected"]) for c in checks)
    criterion(3, "boundary decay slope alpha/2 (+-0.02 quadrature, +-0.05 Monte Carlo)",
              checks, f"; max |slope - alpha/2| {dev:.4f}")


def test_criterion_04_kernel_bounds(criterion):
    checks = []
    for a in DEFAULT_ALPHAS:
        checks += check_kernel_bounds(BALL, StableParams(1, a), mc=_mc(4))
        checks += check_kernel_bounds(Ball((0.0, 0.0), 1.0), StableParams(2, a))
    ratios = [c for c in checks if isinstance(c, RatioReport) and c.asserted]
    slope = max(abs(c.fit.slope - c.expected) for c in ratios if c.mode == "flat")
    criterion(4, "Poisson kernel envelopes and free heat kernel two-sided bound, d = 1, 2",
              checks, f"; max flat-trend |slope| {slope:.4f}")


def test_criterion_05_main_estimate(criterion):
    checks = check_main_estimates(BALL, StableParams(1, 1.0), p=2.0, theta=0.5)
    family = checks[-1]
    assert family.metrics["members"] == 20
    criterion(5, "main elliptic estimate over a 20-member data family, no growth",
              checks, f"; C in [{family.metrics['C_min']:.3g}, {family.metrics['C_max']:.3g}]")


def test_criterion_06_zero_exterior(criterion):
    checks = []
    for a in DEFAULT_ALPHAS:
        checks += check_zero_exterior(BALL, StableParams(1, a), p=2.0, theta=0.5, margin=0.5)
    C = max(c.C for c in checks)
    criterion(6, "zero-exterior estimate bounded for d_z in [1e-3, 1e3]", checks,
              f"; max C {C:.3g}")


def test_criterion_07_appendix(criterion):
    checks = check_appendix_lemmas(BALL)
    criterion(7, "auxiliary estimates: exponent fits and bounded envelope ratios", checks)


def test_criterion_08_norms(criterion):
    checks = check_norms(BALL)
    criterion(8, "dyadic vs direct norms, partition choice, homogeneity to 1e-12", checks)


def test_criterion_09_hardy_rellich(criterion):
    checks = []
    for a in DEFAULT_ALPHAS:
        checks += check_hardy_rellich(BALL, StableParams(1, a), p=2.0, theta=0.5)
    assert all(len(c.rows) >= 20 for c in checks if "bumps" in c.name)
    criterion(9, "Hardy-Rellich ratio bounded over 20 bumps approaching the boundary", checks,
              f"; max C {max(c.C for c in checks):.3g}")


def test_criterion_10_parabolic(criterion):
    checks = check_parabolic(BALL, DEFAULT_ALPHAS, _mc(10))
    reported = sum(not c.asserted for c in checks)
    criterion(10, "parabolic g = 1: monotone, Richardson limit 1, first-order exit bias",
              checks, f"; {reported} reported only")


def test_criterion_11_weak_residual(criterion):
    checks = check_weak_residual(BALL, DEFAULT_ALPHAS)
    worst = max(c.metrics["max_relative_residual"] for c in checks)
    criterion(11, "weak-form residual < 1e-2 x test-function scale for 5 random test functions",
              checks, f"; max scaled residual {worst:.2e}")


def test_criterion_12_determinism_and_speed(criterion, tmp_path):
    cfg = {"domain": {"kind": "ball", "center": [0.0], "radius": 1.0},
           "params": {"d": 1, "alpha": list(DEFAULT_ALPHAS)},
           "suites": ["exit-law", "decay"], "mc": {"paths": 20_000}}
    a = run_scenario(cfg, tmp_path / "a", seed=12)
    b = run_scenario(cfg, tmp_path / "b", seed=12)
    same = verdict_bytes(a) == verdict_bytes(b)
    t0 = time.perf_counter()
    timed = check_exit_law(BALL, DEFAULT_ALPHAS, McConfig(paths=PATHS, seed=5, workers=None))
    elapsed = time.perf_counter() - t0
    checks = [Check("byte-identical verdicts for a fixed seed", "pass" if same else "fail", {}),
              Check("exit-law suite under 60 s at 1e5 paths",
                    "pass" if elapsed < 60 else "fail", {"seconds": elapsed})] + timed
    criterion(12, "fixed seed reproduces verdicts; exit-law suite under 60 s", checks,
              f"; {elapsed:.1f} s on {os.cpu_count()} cores")
