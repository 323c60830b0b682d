"""Panel Gauss-Legendre rules and dyadic shell sums.

Everything singular in this package (boundary layers d^{a}, kernel blow-up,
tails at infinity) is integrated on geometric panels, where power laws look
smooth and plain Gauss-Legendre converges fast.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError

Array = np.ndarray


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[Array, Array]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(edges: Sequence[float] | Array, order: int = 10) -> tuple[Array, Array]:
    """Composite Gauss-Legendre nodes/weights on consecutive panels."""
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2:
        return np.empty(0), np.empty(0)
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_edges(a: float, b: float, *, toward: str = "a", levels: int = 30,
                 ratio: float = 0.5) -> Array:
    """Edges on [a, b] refined geometrically toward one or both ends."""
    if b <= a:
        return np.array([a, b])
    if toward == "both":
        m = 0.5 * (a + b)
        left = graded_edges(a, m, toward="a", levels=levels, ratio=ratio)
        right = graded_edges(m, b, toward="b", levels=levels, ratio=ratio)
        return np.concatenate([left, right[1:]])
    L = b - a
    offsets = L * ratio ** np.arange(levels, -1, -1, dtype=float)
    offsets = np.concatenate([[0.0], offsets])
    if toward == "a":
        return a + offsets
    return (b - offsets)[::-1]


def refine_uniform(edges: Array, max_width: float) -> Array:
    """Split every panel wider than ``max_width`` into equal pieces."""
    out = [edges[0]]
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(1, int(np.ceil((hi - lo) / max_width)))
        out.extend(np.linspace(lo, hi, n + 1)[1:])
    return np.asarray(out)


def integrate_edges(f: Callable[[Array], Array], edges: Array, order: int = 10) -> float:
    nodes, weights = panel_rule(edges, order)
    if nodes.size == 0:
        return 0.0
    return float(np.dot(weights, f(nodes)))


@dataclass
class ShellResult:
    """Shell-sum result; value and error are arrays for vector integrands."""

    value: float | Array
    error: float | Array
    edges: list[float] = field(default_factory=list)
    contributions: list = field(default_factory=list)
    tail: float | Array = 0.0

    def to_dict(self) -> dict:
        def j(v):
            v = np.asarray(v)
            return float(v) if v.ndim == 0 else v.tolist()
        return {
            "value": j(self.value),
            "error": j(self.error),
            "tail_extrapolation": j(self.tail),
            "shells": [
                {"lo": lo, "hi": hi, "value": j(v)}
                for lo, hi, v in zip(self.edges[:-1], self.edges[1:], self.contributions)
            ],
        }


def _shell(f, lo, hi, order, breakpoints, max_width=np.inf):
    inner = [b for b in breakpoints if lo < b < hi]
    edges = np.array([lo, *inner, hi])
    if np.isfinite(max_width):
        # far shells are capped at 64 panels
        edges = refine_uniform(edges, max(max_width, (hi - lo) / 64))
    nodes, weights = panel_rule(edges, order)
    if nodes.size == 0:
        return 0.0
    vals = np.asarray(f(nodes), dtype=float)
    out = np.tensordot(weights, vals, axes=(0, 0))
    return float(out) if out.ndim == 0 else out


def tail_ratio(values) -> tuple[float, float]:
    """Decay ratio q of a trailing shell sequence and the fitted last shell.

    A log-linear fit over the last dozen shells tolerates log-periodic
    ripples (the regularized distance produces them); q >= 0.995 means the
    sum is not converging.
    """
    col = np.abs(np.asarray(values, dtype=float))[-12:]
    keep = col > 0
    if keep.sum() < 3:
        return 0.0, 0.0
    k = np.arange(col.size)[keep]
    slope, icept = np.polyfit(k, np.log(col[keep]), 1)
    q = float(np.exp(slope))
    if q >= 0.995:
        raise DivergenceError(f"shell sum not converging (fitted shell ratio {q:.4f})")
    return q, float(np.exp(icept + slope * (col.size - 1)))


def _geometric_tail(vals: list) -> float | Array:
    """Extrapolate the remaining shells from the last few, componentwise."""
    last = np.asarray(vals, dtype=float)
    if last.ndim == 1:
        last = last[:, None]
    tail = np.zeros(last.shape[1])
    for i in range(last.shape[1]):
        q, level = tail_ratio(last[:, i])
        sign = np.sign(last[-1, i]) or 1.0
        tail[i] = sign * level * q / (1.0 - q)
    return float(tail[0]) if np.ndim(vals[-1]) == 0 else tail


def _march(f, start, factor, order, rtol, max_shells, min_shells, breakpoints, stop,
           floor=0.0, max_width=np.inf):
    """Integrate shells start*factor^k outward/inward until negligible.

    Marching inward stops early once shells fall below ``floor`` (where the
    caller's coordinates lose precision); the remainder is then extrapolated.
    """
    edges = [start]
    vals: list = []
    total = 0.0
    quiet = 0
    a = start
    for k in range(max_shells):
        b = a * factor
        if stop is not None and ((factor > 1 and b >= stop) or (factor < 1 and b <= stop)):
            b = stop
        lo, hi = (a, b) if b > a else (b, a)
        v = _shell(f, lo, hi, order, breakpoints, max_width)
        vals.append(v)
        edges.append(b)
        total = total + v
        if b == stop:
            return edges, vals, 0.0
        tot = np.abs(total)
        if np.any(tot != 0.0) and np.all(np.abs(v) <= rtol * tot):
            quiet += 1
        else:
            quiet = 0
        if quiet >= 3 and k + 1 >= min_shells:
            return edges, vals, 0.0
        a = b
        if factor < 1 and b <= floor and k + 1 >= min_shells:
            break
    # not negligible after max_shells (or floor): extrapolate a geometric tail or give up
    return edges, vals, _geometric_tail(vals)


def shell_integrate(f: Callable[[Array], Array], lo: float, hi: float, *, order: int = 10,
                    rtol: float = 1e-13, max_shells: int = 400, min_shells: int = 4,
                    pivot: float | None = None, breakpoints: Sequence[float] = (),
                    floor: float = 0.0, max_width: float = np.inf) -> ShellResult:
    """Integrate ``f`` over (lo, hi) with dyadic shells.

    ``lo`` may be 0 and ``hi`` may be ``inf``; near those ends shells are
    added until they stop contributing, and a geometric tail is appended when
    the decay is slow. A non-decaying shell sequence raises DivergenceError.
    ``max_width`` caps panel widths for integrands with a short length scale.
    """
    if hi <= lo:
        return ShellResult(0.0, 0.0, [lo, hi], [0.0])
    # vector integrands: the result carries one entry per output component
    breakpoints = sorted(float(b) for b in breakpoints)
    if lo > 0 and np.isfinite(hi):
        n = max(1, int(np.ceil(np.log2(hi / lo))))
        edges = np.geomspace(lo, hi, n + 1)
        vals = [_shell(f, a, b, order, breakpoints, max_width)
                for a, b in zip(edges[:-1], edges[1:])]
        v = sum(vals)
        lo_res = sum(_shell(f, a, b, order // 2 + 1, breakpoints, max_width)
                     for a, b in zip(edges[:-1], edges[1:]))
        return ShellResult(v, np.abs(v - lo_res), list(edges), vals)
    if lo == 0 and np.isfinite(hi):
        e, vals, tail = _march(f, hi, 0.5, order, rtol, max_shells, min_shells, breakpoints, None,
                               floor, max_width)
        edges = e[::-1]
        vals = vals[::-1]
        v = sum(vals) + tail
        return ShellResult(v, np.abs(tail) * 0.3 + 1e-15 * np.abs(v), edges, vals, tail)
    if lo > 0 and not np.isfinite(hi):
        e, vals, tail = _march(f, lo, 2.0, order, rtol, max_shells, min_shells, breakpoints, None,
                               max_width=max_width)
        v = sum(vals) + tail
        return ShellResult(v, np.abs(tail) * 0.3 + 1e-15 * np.abs(v), e, vals, tail)
    p = 1.0 if pivot is None else pivot
    left = shell_integrate(f, 0.0, p, order=order, rtol=rtol, max_shells=max_shells,
                           min_shells=min_shells, breakpoints=breakpoints, floor=floor,
                           max_width=max_width)
    right = shell_integrate(f, p, np.inf, order=order, rtol=rtol, max_shells=max_shells,
                            min_shells=min_shells, breakpoints=breakpoints, max_width=max_width)
    return ShellResult(left.value + right.value, left.error + right.error,
                       left.edges + right.edges[1:], left.contributions + right.contributions,
                       left.tail + right.tail)
