"""Monte Carlo for subordinators and subordinate Brownian motion.

Paths live on the time grid ``k h``.  Over one step the subordinator advances
by an exact increment ``dS`` and the process moves by ``sqrt(2 dS)`` times a
standard normal vector (Brownian motion with generator Delta).  All randomness
comes from :mod:`psidel.rng`, keyed by ``(seed, path, step, stream)``: stream 0
feeds the Brownian increments, streams 1, 2, ... the subordinator (one stream
per rejection attempt).
"""
from __future__ import annotations

import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as crng

__all__ = [
    "PathConfig",
    "MCEstimate",
    "ExitSample",
    "DecayEstimate",
    "NoExactSampler",
    "HorizonTooShort",
    "InsufficientSurvivors",
    "sample_subordinator_increment",
    "subordinator_sample",
    "laplace_calibration",
    "sample_exit",
    "simulate_paths",
    "estimate_torsion",
    "feynman_kac",
    "survival_decay_rate",
]

SUPPORTED = ("stable", "relativistic", "sum_stable")
MAX_REJECTIONS = 10 ** 6
CHUNK = 8192  # paths per work unit; fixed so that --jobs never changes a reduction


class NoExactSampler(ValueError):
    pass


class HorizonTooShort(RuntimeError):
    pass


class InsufficientSurvivors(RuntimeError):
    pass


@dataclass(frozen=True)
class PathConfig:
    h: float = 1e-3
    t_max: float = 5.0
    seed: int = 0
    path: int = 0

    def __post_init__(self):
        if not (self.h > 0 and self.t_max > 0):
            raise ValueError("time step and horizon must be positive")
        if self.h > self.t_max:
            raise ValueError("time step exceeds the horizon")

    @property
    def n_steps(self):
        return int(math.ceil(self.t_max / self.h - 1e-9))


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int
    seed: int
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_samples(cls, x, seed, **info):
        x = np.asarray(x, dtype=float)
        if x.size < 2:
            raise ValueError("an estimate needs at least two samples")
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), int(x.size),
                   int(seed), info)


@dataclass(frozen=True)
class ExitSample:
    tau: float
    x_tau: np.ndarray
    censored: bool


# ---------------------------------------------------------------------------
# subordinator increments
# ---------------------------------------------------------------------------
def _stable_draw(a, t, u1, u2):
    """Kanter's representation of the one-sided a-stable law, E e^{-x S} = e^{-t x^a}."""
    if a == 1.0:
        return np.full(np.shape(u1), float(t))
    U = math.pi * u1
    E = -np.log(u2)
    log_s = (np.log(np.sin(a * U)) - np.log(np.sin(U)) / a
             + (1 - a) / a * (np.log(np.sin((1 - a) * U)) - np.log(E)))
    return t ** (1 / a) * np.exp(log_s)


def _draw(psi, t, source, n):
    """``n`` increments ``S_t``; ``source(attempt, idx, k)`` supplies uniforms."""
    if psi.kind not in SUPPORTED:
        raise NoExactSampler(f"no exact sampler for {psi}")
    a = psi.alpha / 2
    idx = np.arange(n)
    if psi.kind == "stable":
        u = source(0, idx, 2)
        return _stable_draw(a, t, u[:, 0], u[:, 1])
    if psi.kind == "sum_stable":
        u = source(0, idx, 4)
        return _stable_draw(a, t, u[:, 0], u[:, 1]) + _stable_draw(psi.beta / 2, t, u[:, 2], u[:, 3])
    # relativistic: exponential tilting of the stable law, accepted with e^{-lam s}
    lam = psi.lam
    out = np.empty(n)
    pending = idx
    attempt = 0
    while pending.size:
        if attempt >= MAX_REJECTIONS:
            raise RuntimeError("rejection sampler exceeded 10^6 retries; reduce the time step")
        u = source(attempt, pending, 3)
        s = _stable_draw(a, t, u[:, 0], u[:, 1])
        ok = u[:, 2] < np.exp(-lam * s)
        out[pending[ok]] = s[ok]
        pending = pending[~ok]
        attempt += 1
    return out


def sample_subordinator_increment(psi, t, rng=None, size=None):
    """Draw ``S_t`` (one value, or an array of ``size``) from a numpy Generator."""
    if not t > 0:
        raise ValueError("increment time must be positive")
    gen = np.random.default_rng(rng)
    n = 1 if size is None else int(np.prod(size))

    def source(attempt, idx, k):
        return np.clip(gen.random((len(idx), k)), 2.0 ** -60, 1 - 2.0 ** -53)

    out = _draw(psi, t, source, n)
    return float(out[0]) if size is None else out.reshape(size)


def _increments(psi, t, key, paths, step):
    return _draw(psi, t, lambda att, idx, k: crng.uniforms(key, paths[idx], step, 1 + att, k),
                 len(paths))


def subordinator_sample(psi, t, n, seed=0):
    """``S_t`` for paths ``0..n-1`` from the counter streams (step 0)."""
    return _increments(psi, t, crng.seed_key(seed), np.arange(n, dtype=np.uint64), 0)


def laplace_calibration(psi, t, n=100_000, seed=0, x=1.0):
    """Empirical ``E exp(-x S_t)`` with the exact value ``exp(-t Psi(x))`` in ``info``."""
    s = subordinator_sample(psi, t, n, seed)
    est = MCEstimate.from_samples(np.exp(-x * s), seed)
    exact = math.exp(-t * float(psi(x)))
    diff = est.mean - exact
    # a degenerate (pure drift) subordinator has zero variance: allow roundoff
    agrees = abs(diff) <= 3 * est.stderr + 1e-12
    return MCEstimate(est.mean, est.stderr, est.n, est.seed,
                      {"exact": exact, "t": t, "agrees": bool(agrees)})


# ---------------------------------------------------------------------------
# path engine
# ---------------------------------------------------------------------------
@dataclass
class PathBatch:
    """Per-path results of one simulation (arrays indexed by path)."""

    tau: np.ndarray
    x_exit: np.ndarray
    censored: np.ndarray
    log_weight: np.ndarray  # (n, n_obs): int_0^t c(X_s) ds, -inf once dead
    x_obs: np.ndarray  # (n, n_obs, d): X at the observation times (nan once dead)


def _run_chunk(dom, x0, psi, cfg, paths, obs_steps, c):
    key = crng.seed_key(cfg.seed)
    d = dom.d
    n = len(paths)
    x0 = np.asarray(x0, dtype=float).reshape(d)
    tau = np.zeros(n)
    x_exit = np.tile(x0, (n, 1))
    censored = np.zeros(n, dtype=bool)
    n_obs = len(obs_steps)
    logw = np.full((n, n_obs), -np.inf)
    x_obs = np.full((n, n_obs, d), np.nan)
    if not dom.contains(x0[None, :])[0]:
        return PathBatch(tau, x_exit, censored, logw, x_obs)

    act = np.arange(n)  # positions into the chunk arrays
    X = np.tile(x0, (n, 1))
    L = np.zeros(n)
    obs_at = {s: j for j, s in enumerate(obs_steps)}
    # observation runs stop at the last observation; exit runs go to the horizon
    horizon = max(obs_steps) if n_obs else cfg.n_steps
    h = cfg.h
    for k in range(horizon + 1):
        j = obs_at.get(k)
        if j is not None:
            logw[act, j] = L
            x_obs[act, j] = X
        if k == horizon or (act.size == 0):
            break
        if c is not None:
            L = L + h * c(X)
        pid = paths[act]
        dS = _increments(psi, h, key, pid, k)
        Z = crng.normals(key, pid, k, 0, d)
        X = X + np.sqrt(2.0 * dS)[:, None] * Z
        out = ~dom.contains(X)
        if np.any(out):
            gone = act[out]
            tau[gone] = (k + 1) * h
            x_exit[gone] = X[out]
            keep = ~out
            act, X, L = act[keep], X[keep], L[keep]
    if act.size:
        tau[act] = horizon * h
        x_exit[act] = X
        censored[act] = True
    return PathBatch(tau, x_exit, censored, logw, x_obs)


_PAYLOAD = {}


def _worker(i):
    dom, x0, psi, cfg, n, obs_steps, c = _PAYLOAD["args"]
    paths = np.arange(i * CHUNK, min(n, (i + 1) * CHUNK), dtype=np.uint64)
    return _run_chunk(dom, x0, psi, cfg, paths, obs_steps, c)


def simulate_paths(dom, x, psi, cfg, n, obs_times=(), c=None, jobs=1):
    """Simulate paths ``0..n-1`` from ``x`` and collect exit and observation data.

    Work is split into fixed chunks of paths; with ``jobs > 1`` the chunks run in
    forked worker processes.  Results are concatenated in path order, so the
    output does not depend on ``jobs``.
    """
    if psi.kind not in SUPPORTED:
        raise NoExactSampler(f"no exact sampler for {psi}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != dom.d:
        raise ValueError("starting point has the wrong dimension")
    obs_steps = [int(round(t / cfg.h)) for t in obs_times]
    if any(s > cfg.n_steps for s in obs_steps):
        raise ValueError("observation time beyond the horizon")
    n_chunks = -(-n // CHUNK)
    args = (dom, x, psi, cfg, n, obs_steps, c)
    if jobs > 1 and n_chunks > 1:
        _PAYLOAD["args"] = args
        try:
            ctx = mp.get_context("fork")
            with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
                parts = list(pool.map(_worker, range(n_chunks)))
        finally:
            _PAYLOAD.clear()
    else:
        parts = []
        for i in range(n_chunks):
            paths = np.arange(i * CHUNK, min(n, (i + 1) * CHUNK), dtype=np.uint64)
            parts.append(_run_chunk(dom, x, psi, cfg, paths, obs_steps, c))
    return PathBatch(*(np.concatenate([getattr(p, f) for p in parts])
                       for f in ("tau", "x_exit", "censored", "log_weight", "x_obs")))


def sample_exit(dom, x, psi, cfg):
    """Exit data of the single path ``cfg.path`` (identical to its value in any batch)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    batch = _run_chunk(dom, x, psi, cfg, np.array([cfg.path], dtype=np.uint64), [], None)
    return ExitSample(float(batch.tau[0]), batch.x_exit[0], bool(batch.censored[0]))


def estimate_torsion(dom, x, psi, cfg, n, jobs=1):
    """Mean exit time ``E^x tau`` from ``n`` paths; censored paths count at the horizon."""
    if n < 2:
        raise ValueError("need at least two paths")
    batch = simulate_paths(dom, x, psi, cfg, n, jobs=jobs)
    frac = float(batch.censored.mean())
    if frac >= 0.1:
        raise HorizonTooShort(f"horizon too short: {frac:.1%} of paths censored")
    return MCEstimate.from_samples(batch.tau, cfg.seed, censored_fraction=frac)


def feynman_kac(dom, c, lam, g, t, x, psi, cfg, n, jobs=1):
    """``E^x[exp(int_0^t (c - lam)(X_s) ds) g(X_t) 1{t < tau}]``.

    ``c`` and ``g`` map arrays of points (m, d) to values (m,); ``c=None`` means 0
    and ``g=None`` means 1.  The time integral is a left Riemann sum on the grid.
    """
    batch = simulate_paths(dom, x, psi, cfg, n, obs_times=[t], c=c, jobs=jobs)
    vals = _fk_values(batch, 0, lam, t, g)
    return MCEstimate.from_samples(vals, cfg.seed, survivors=int(np.isfinite(batch.log_weight[:, 0]).sum()))


def _fk_values(batch, j, lam, t, g):
    lw = batch.log_weight[:, j]
    alive = np.isfinite(lw)
    vals = np.zeros(len(lw))
    if np.any(alive):
        gx = 1.0 if g is None else g(batch.x_obs[alive, j])
        vals[alive] = np.exp(lw[alive] - lam * t) * gx
    return vals


@dataclass(frozen=True)
class DecayEstimate:
    """Survival decay rate ``-d/dt log E[exp(int c) 1{tau > t}]`` (approximates ``-lambda_D``)."""

    rate: float
    stderr: float
    times: np.ndarray
    log_survival: np.ndarray
    survivors: np.ndarray

    def __float__(self):
        return self.rate


def survival_decay_rate(dom, psi, c, tgrid, x, cfg, n, jobs=1, batches=20):
    """Least-squares decay rate of the (weighted) survival function over ``tgrid``.

    Only grid times with at least 100 surviving paths enter the fit, and at
    least four are required.  The standard error comes from batch means over
    ``batches`` contiguous groups of paths.
    """
    tgrid = np.asarray(tgrid, dtype=float)
    batch = simulate_paths(dom, x, psi, cfg, n, obs_times=tgrid, c=c, jobs=jobs)
    alive = np.isfinite(batch.log_weight)
    survivors = alive.sum(axis=0)
    if len(tgrid) < 2 or survivors[1] < 100:
        raise InsufficientSurvivors("insufficient survivors at the second grid time")
    use = survivors >= 100
    if use.sum() < 4:
        raise InsufficientSurvivors("insufficient survivors: fewer than four usable grid times")
    w = np.where(alive, np.exp(np.where(alive, batch.log_weight, 0.0)), 0.0)

    def fit(weights):
        p = weights[:, use].mean(axis=0)
        return -np.polyfit(tgrid[use], np.log(p), 1)[0], np.log(p)

    rate, logp = fit(w)
    groups = np.array_split(np.arange(n), batches)
    reps = []
    for gidx in groups:
        sub = w[gidx][:, use]
        if np.all(sub.mean(axis=0) > 0):
            reps.append(fit(w[gidx])[0])
    se = float(np.std(reps, ddof=1) / math.sqrt(len(reps))) if len(reps) > 1 else float("nan")
    full_logp = np.full(len(tgrid), np.nan)
    full_logp[use] = logp
    return DecayEstimate(float(rate), se, tgrid, full_logp, survivors)
