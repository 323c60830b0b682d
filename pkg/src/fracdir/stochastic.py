"""Isotropic alpha-stable sampling: increments, exact ball exits,
walk-on-spheres and killed paths.

All samplers are vectorized over paths. Monte Carlo drivers split the path
count into fixed-size chunks, each with its own seeded stream, and merge the
chunks in index order, so results do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import math
import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError
from .geometry import Ball, Domain, HalfSpace, _as_points
from .kernels import StableParams

Array = np.ndarray


@dataclass(frozen=True)
class RngStream:
    """Stream ``stream`` of the seed ``seed``; distinct streams are independent."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.default_rng(ss)


@dataclass(frozen=True)
class McConfig:
    paths: int = 100_000
    seed: int = 0
    dt: float | None = None
    max_steps: int = 10_000
    chunk: int = 16_384
    workers: int | None = None

    def __post_init__(self):
        if self.paths < 1:
            raise InputError("paths must be >= 1")
        if self.dt is not None and not self.dt > 0:
            raise InputError("dt must be positive")
        if self.chunk < 1 or self.max_steps < 1:
            raise InputError("chunk and max_steps must be >= 1")

    def with_paths(self, paths: int) -> "McConfig":
        return McConfig(paths, self.seed, self.dt, self.max_steps, self.chunk, self.workers)

    def to_dict(self) -> dict:
        return {"paths": self.paths, "seed": self.seed, "dt": self.dt,
                "max_steps": self.max_steps, "chunk": self.chunk}


@dataclass
class ExitRecord:
    position: Array
    time: float | None
    steps: int
    exited: bool = True


@dataclass
class ExitBatch:
    """Column storage for many exit records.

    ``exited`` is False for survivors (killed paths reaching the horizon) and
    for walk-on-spheres runs censored at ``max_steps``; their ``positions``
    hold the last iterate. ``times`` is NaN when no exit time exists.
    ``integral`` carries the running time-integral of f along killed paths.
    """

    positions: Array
    times: Array
    steps: Array
    exited: Array
    integral: Array | None = None

    def __len__(self) -> int:
        return self.positions.shape[0]

    def record(self, i: int) -> ExitRecord:
        t = self.times[i]
        return ExitRecord(self.positions[i].copy(), None if np.isnan(t) else float(t),
                          int(self.steps[i]), bool(self.exited[i]))

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(~self.exited)) if len(self) else 0.0

    @staticmethod
    def concat(parts: list["ExitBatch"]) -> "ExitBatch":
        integ = None
        if parts and parts[0].integral is not None:
            integ = np.concatenate([p.integral for p in parts])
        return ExitBatch(np.concatenate([p.positions for p in parts]),
                         np.concatenate([p.times for p in parts]),
                         np.concatenate([p.steps for p in parts]),
                         np.concatenate([p.exited for p in parts]), integ)

    def write_csv(self, path) -> None:
        d = self.positions.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(d)] + ["time", "steps", "exited"])
            for i in range(len(self)):
                t = self.times[i]
                w.writerow([repr(float(v)) for v in self.positions[i]]
                           + ["" if np.isnan(t) else repr(float(t)), int(self.steps[i]),
                              int(self.exited[i])])


# --- increments ------------------------------------------------------------


def _symmetric_stable_1d(alpha: float, n: int, rng: np.random.Generator) -> Array:
    """Chambers-Mallows-Stuck draw with E exp(i xi X) = exp(-|xi|^alpha)."""
    v = rng.uniform(-math.pi / 2, math.pi / 2, n)
    w = rng.standard_exponential(n)
    if alpha == 1.0:
        return np.tan(v)
    return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))


def _positive_stable(beta: float, n: int, rng: np.random.Generator) -> Array:
    """Kanter's representation: E exp(-lam S) = exp(-lam^beta), 0 < beta < 1."""
    u = rng.uniform(0.0, math.pi, n)
    w = rng.standard_exponential(n)
    return (np.sin(beta * u) / np.sin(u) ** (1.0 / beta)
            * (np.sin((1.0 - beta) * u) / w) ** ((1.0 - beta) / beta))


def _unit_stable(params: StableParams, n: int, rng: np.random.Generator) -> Array:
    if params.d == 1:
        return _symmetric_stable_1d(params.alpha, n, rng)[:, None]
    s = _positive_stable(params.alpha / 2, n, rng)
    z = rng.standard_normal((n, params.d))
    return np.sqrt(2.0 * s)[:, None] * z


def sample_increment(params: StableParams, t: float, rng: np.random.Generator,
                     size: int | None = None) -> Array:
    """Draw X_t; shape (d,) or (size, d)."""
    if not t > 0:
        raise InputError("t must be positive")
    n = 1 if size is None else int(size)
    x = t ** (1.0 / params.alpha) * _unit_stable(params, n, rng)
    return x[0] if size is None else x


def _directions(d: int, n: int, rng: np.random.Generator) -> Array:
    if d == 1:
        return np.where(rng.random(n) < 0.5, -1.0, 1.0)[:, None]
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _center_exit(params: StableParams, centers: Array, radii: Array,
                 rng: np.random.Generator) -> Array:
    """Exit positions from balls B(centers, radii) started at their centers.

    With Z the exit point, r^2/|Z-c|^2 ~ Beta(alpha/2, 1-alpha/2) and the
    direction is uniform.
    """
    n = centers.shape[0]
    a = params.alpha
    b = rng.beta(a / 2, 1.0 - a / 2, n)
    b = np.maximum(b, np.finfo(float).tiny)
    rho = radii / np.sqrt(b)
    return centers + rho[:, None] * _directions(params.d, n, rng)


# --- exits ---------------------------------------------------------------


def _wos(domain: Domain, params: StableParams, x: Array, rng: np.random.Generator,
         max_steps: int) -> ExitBatch:
    pos = np.array(x, dtype=float, copy=True)
    n = pos.shape[0]
    steps = np.zeros(n, dtype=np.int64)
    active = domain.signed(pos) > 0
    idx = np.nonzero(active)[0]
    k = 0
    while idx.size and k < max_steps:
        p = pos[idx]
        pos[idx] = _center_exit(params, p, domain.signed(p), rng)
        steps[idx] += 1
        still = domain.signed(pos[idx]) > 0
        idx = idx[still]
        k += 1
    exited = np.ones(n, dtype=bool)
    exited[idx] = False
    return ExitBatch(pos, np.full(n, np.nan), steps, exited)


def _start(domain: Domain, params: StableParams, x, n: int) -> Array:
    x = _as_points(x, params.d)
    if x.ndim != 1:
        raise InputError("a single starting point is expected")
    if domain.d != params.d:
        raise InputError("dimension mismatch between domain and params")
    if not domain.signed(x) > 0:
        raise DomainError("starting point must lie inside the domain")
    return np.broadcast_to(x, (n, params.d))


def walk_on_spheres(domain: Domain, params: StableParams, x, rng: np.random.Generator,
                    max_steps: int = 10_000, size: int | None = None):
    """Greedy walk-on-spheres: jump from B(x, d_x) exits until leaving D.

    Returns an ExitRecord (``size`` None) or an ExitBatch. Runs still inside
    after ``max_steps`` are censored (``exited`` False), never dropped.
    """
    n = 1 if size is None else int(size)
    batch = _wos(domain, params, _start(domain, params, x, n), rng, max_steps)
    return batch.record(0) if size is None else batch


def ball_exit_sample(ball: Ball, params: StableParams, x, rng: np.random.Generator,
                     size: int | None = None) -> Array:
    """Exact draw from the ball Poisson kernel K_B(x, .).

    From the center this is one Beta draw in the radial variable plus a uniform
    direction. From other points the walk-on-spheres chain inside the ball is
    used; by the strong Markov property its final position has exactly the
    same law.
    """
    n = 1 if size is None else int(size)
    x0 = _start(ball, params, x, n)
    if np.allclose(x0[0], ball.c, rtol=0, atol=0):
        out = _center_exit(params, np.array(x0), np.full(n, ball.radius), rng)
    else:
        out = _wos(ball, params, x0, rng, max_steps=10 ** 6).positions
    return out[0] if size is None else out


def killed_path(domain: Domain, params: StableParams, x, dt: float, horizon: float,
                rng: np.random.Generator, size: int | None = None, f=None):
    """Euler walk with exact stable increments, killed at the first grid exit.

    Exit time is steps * dt and the overshoot position is kept exactly.
    Survivors report the position at the last grid time before ``horizon``.
    With ``f`` the left-point sum dt * sum f(X_{k dt}) over steps before the
    exit is accumulated in ``integral``.
    """
    if not dt > 0:
        raise InputError("dt must be positive")
    n = 1 if size is None else int(size)
    pos = np.array(_start(domain, params, x, n), dtype=float)
    nsteps = int(math.floor(horizon / dt * (1 + 1e-12)))
    times = np.full(n, np.nan)
    steps = np.zeros(n, dtype=np.int64)
    exited = np.zeros(n, dtype=bool)
    integ = np.zeros(n) if f is not None else None
    idx = np.arange(n)
    scale = dt ** (1.0 / params.alpha)
    for k in range(1, nsteps + 1):
        if not idx.size:
            break
        p = pos[idx]
        if f is not None:
            integ[idx] += dt * np.asarray(f(p), dtype=float)
        p = p + scale * _unit_stable(params, idx.size, rng)
        pos[idx] = p
        steps[idx] = k
        out = domain.signed(p) <= 0
        hit = idx[out]
        times[hit] = k * dt
        exited[hit] = True
        idx = idx[~out]
    batch = ExitBatch(pos, times, steps, exited, integ)
    return batch.record(0) if size is None else batch


def exit_times_multilevel(domain: Domain, params: StableParams, x, dt_fine: float,
                          strides, horizon: float, rng: np.random.Generator,
                          size: int) -> dict:
    """Exit times of one fine path family monitored on several grids.

    ``strides`` are integers m; level m observes the path every m * dt_fine.
    Returns {m: times} with NaN for paths not caught by the horizon. Coarser
    monitoring can only detect later, so coupled differences have small
    variance.
    """
    strides = sorted({int(m) for m in strides})
    n = int(size)
    pos = np.array(_start(domain, params, x, n), dtype=float)
    nsteps = int(math.floor(horizon / dt_fine * (1 + 1e-12)))
    times = {m: np.full(n, np.nan) for m in strides}
    alive = {m: np.ones(n, dtype=bool) for m in strides}
    idx = np.arange(n)
    scale = dt_fine ** (1.0 / params.alpha)
    coarse = strides[-1]
    for k in range(1, nsteps + 1):
        if not idx.size:
            break
        pos[idx] += scale * _unit_stable(params, idx.size, rng)
        due = [m for m in strides if k % m == 0]
        if not due:
            continue
        outside = domain.signed(pos[idx]) <= 0
        for m in due:
            hit = idx[outside & alive[m][idx]]
            times[m][hit] = k * dt_fine
            alive[m][hit] = False
        if k % coarse == 0:
            idx = idx[alive[coarse][idx]]
    return times


# --- chunked drivers -------------------------------------------------------


def _chunk_sizes(paths: int, chunk: int) -> list[int]:
    full, rem = divmod(paths, chunk)
    return [chunk] * full + ([rem] if rem else [])


def _run_chunk(task):
    fn, args, seed, stream, n = task
    rng = RngStream(seed, stream).generator()
    return fn(*args, rng=rng, size=n)


def _picklable(obj) -> bool:
    try:
        pickle.dumps(obj)
        return True
    except Exception:
        return False


def run_chunked(fn, args: tuple, mc: McConfig):
    """Evaluate ``fn(*args, rng=..., size=n)`` over seeded chunks; list in chunk order."""
    sizes = _chunk_sizes(mc.paths, mc.chunk)
    tasks = [(fn, args, mc.seed, i, n) for i, n in enumerate(sizes)]
    workers = mc.workers if mc.workers is not None else (os.cpu_count() or 1)
    workers = min(workers, len(tasks))
    if workers > 1 and _picklable(tasks[0]):
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_run_chunk, tasks))
    return [_run_chunk(t) for t in tasks]


def walk_on_spheres_mc(domain: Domain, params: StableParams, x, mc: McConfig) -> ExitBatch:
    return ExitBatch.concat(run_chunked(_wos_task, (domain, params, x, mc.max_steps), mc))


def _wos_task(domain, params, x, max_steps, rng=None, size=None):
    return walk_on_spheres(domain, params, x, rng, max_steps=max_steps, size=size)


def _killed_task(domain, params, x, dt, horizon, f, rng=None, size=None):
    return killed_path(domain, params, x, dt, horizon, rng, size=size, f=f)


def killed_paths_mc(domain: Domain, params: StableParams, x, mc: McConfig,
                    horizon: float, f=None) -> ExitBatch:
    if mc.dt is None:
        raise InputError("killed-path simulation needs mc.dt")
    parts = run_chunked(_killed_task, (domain, params, x, mc.dt, horizon, f), mc)
    return ExitBatch.concat(parts)


def _multilevel_task(domain, params, x, dt_fine, strides, horizon, rng=None, size=None):
    return exit_times_multilevel(domain, params, x, dt_fine, strides, horizon, rng, size)


def exit_times_multilevel_mc(domain: Domain, params: StableParams, x, dt_fine: float,
                             strides, horizon: float, mc: McConfig) -> dict:
    parts = run_chunked(_multilevel_task, (domain, params, x, dt_fine, tuple(strides), horizon),
                        mc)
    return {m: np.concatenate([p[m] for p in parts]) for m in parts[0]}
