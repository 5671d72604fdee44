"""Numerical checks of the maximum-principle family on assembled operators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import eigsh

from ..ladder import gauge_phi
from .linear import DirichletSolver, Resonant, principal_eigenpair

__all__ = [
    "hopf_ratio",
    "abp_check",
    "AntimaxReport",
    "antimax_check",
    "GapReport",
    "spectral_gap_check",
    "min_singular_value",
    "inverse_sign_check",
    "NotSupersolution",
]


class NotSupersolution(ValueError):
    pass


def hopf_ratio(u, grid, psi, tol=0.0, corner_clearance=0.0):
    """``min u / phi(delta)`` over nodes within a quarter diameter of the boundary.

    ``tol`` lets roundoff-level negative values through; anything more negative
    is rejected.  With ``corner_clearance > 0`` nodes closer than that to a
    corner of a box are left out: the boundary rate only holds where the
    boundary is smooth, and at a corner ``u / phi(delta)`` tends to 0.
    """
    u = np.asarray(u, dtype=float)
    scale = max(float(np.abs(u).max()), 1e-300)
    if np.any(u < -tol * scale):
        raise NotSupersolution("not a nonnegative super-solution sample")
    band = grid.delta < grid.domain.diameter / 4
    if corner_clearance > 0 and hasattr(grid.domain, "corners"):
        gap = np.linalg.norm(grid.points[:, None, :] - grid.domain.corners[None], axis=-1)
        band &= gap.min(axis=1) >= corner_clearance
    if not np.any(band):
        raise ValueError("no nodes in the boundary band")
    return float(np.min(np.maximum(u[band], 0.0) / gauge_phi(psi, grid.delta[band])))


def abp_check(u, f, p, psi, grid):
    """``sup u^+ / ||f^+||_{L^p}``; needs ``p > d / (2 mu)`` with ``mu`` the lower scaling exponent."""
    mu = psi.lower_exponent
    threshold = grid.d / (2 * mu)
    if not p > threshold:
        raise ValueError(f"exponent below ABP threshold: p = {p} <= d/(2 mu) = {threshold:g}")
    top = float(np.maximum(np.asarray(u, float), 0.0).max())
    if top == 0.0:
        return 0.0
    norm = grid.lp_norm(np.maximum(np.asarray(f, float), 0.0), p)
    if norm == 0.0:
        return np.inf
    return top / norm


@dataclass
class AntimaxReport:
    delta_star: float | None
    lam_D: float
    vacuous: bool = False
    tested: list = field(default_factory=list)  # (lambda, max u) pairs
    skipped: list = field(default_factory=list)  # resonant lambdas
    outside: dict = field(default_factory=dict)  # sign pattern at lambda_D - 10 delta*


def antimax_check(op, c, f, deltas=None, points_per_delta=4, eig=None):
    """Largest tested ``delta`` with ``u < 0`` for every tested ``lambda`` in ``(lambda_D - delta, lambda_D)``.

    ``u`` solves ``(A + diag(c - lambda)) u = f`` for ``f <= 0``.  The tested
    shifts ``s = lambda_D - lambda`` form one increasing list built from the
    candidate ``deltas`` (each subdivided into ``points_per_delta`` points).
    """
    f = np.asarray(f, dtype=float)
    if np.any(f > 0):
        raise ValueError("antimax source must be nonpositive")
    eig = principal_eigenpair(op, c) if eig is None else eig
    lam = eig.lam
    if not np.any(f):
        return AntimaxReport(None, lam, vacuous=True)
    if deltas is None:
        deltas = abs(lam) * np.geomspace(1e-3, 2.0, 12)
    deltas = np.sort(np.asarray(deltas, dtype=float))
    shifts = np.unique(np.concatenate(
        [dl * np.arange(1, points_per_delta + 1) / points_per_delta for dl in deltas]))
    rep = AntimaxReport(None, lam)
    ok_up_to = 0.0
    for s in shifts:
        try:
            u = DirichletSolver(op, c, shift=lam - s).solve(f)
        except Resonant:
            rep.skipped.append(float(lam - s))
            continue
        rep.tested.append((float(lam - s), float(u.max())))
        if np.all(u < 0):
            ok_up_to = s
        else:
            break
    # every tested shift below a passing delta passed; the window is open at delta
    good = [dl for dl in deltas if dl <= ok_up_to]
    rep.delta_star = float(max(good)) if good else None
    if rep.delta_star:
        probe = lam - 10 * rep.delta_star
        try:
            u = DirichletSolver(op, c, shift=probe).solve(f)
            rep.outside = {"lambda": probe, "negative_nodes": int((u < 0).sum()),
                           "nonnegative_nodes": int((u >= 0).sum())}
        except Resonant:
            rep.outside = {"lambda": probe, "resonant": True}
    return rep


def min_singular_value(M, mu, iters=60):
    """Smallest singular value of the symmetric matrix ``M - mu I`` by inverse iteration."""
    n = M.shape[0]
    B = M - mu * np.eye(n)
    try:
        lu = linalg.lu_factor(B, check_finite=False)
    except (linalg.LinAlgError, ValueError):
        return 0.0
    if np.any(np.diag(lu[0]) == 0):
        return 0.0
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = linalg.lu_solve(lu, v, check_finite=False)
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(B @ v))


@dataclass
class GapReport:
    gap: float
    lam_D: float
    nearby: np.ndarray
    one_dimensional: bool
    sv_at_lambda: float
    sv_second: float
    scan: list  # (mu, min singular value, |mu - lambda_D|)
    nontrivial_found: bool


def spectral_gap_check(op, c=None, eps=None, k=6, eig=None):
    """Isolation of the principal eigenvalue.

    ``gap`` is the distance from ``lambda_D`` to the nearest other eigenvalue
    (shift-invert Lanczos near ``lambda_D``).  The scan evaluates the smallest
    singular value of ``A + diag(c) - mu`` at shifts within ``eps`` of
    ``lambda_D`` and requires it to stay above half the distance to
    ``lambda_D``; a value below that would reveal a second solution.
    """
    M = op.with_c(c)
    eig = principal_eigenpair(op, c) if eig is None else eig
    lam = eig.lam
    norm = float(np.abs(M).sum(axis=1).max())
    sigma = lam + 1e-3 * max(1.0, abs(lam))
    vals = eigsh(M, k=min(k, op.n - 1), sigma=sigma, which="LM", return_eigenvectors=False)
    vals = np.sort(vals)[::-1]
    others = vals[np.abs(vals - lam) > 1e-8 * max(1.0, abs(lam))]
    gap = float(np.min(np.abs(others - lam))) if others.size else np.inf
    sv0 = min_singular_value(M, lam)
    eps = gap / 2 if eps is None else eps
    scan = []
    found = False
    for frac in (-1.0, -0.5, -0.1, 0.1, 0.5, 1.0):
        mu = lam + frac * eps
        sv = min_singular_value(M, mu)
        dist = abs(mu - lam)
        scan.append((mu, sv, dist))
        if sv < 0.5 * dist:
            found = True
    one_dim = sv0 <= 1e-8 * norm and gap >= 1e-6 * norm
    return GapReport(gap, lam, vals, bool(one_dim), sv0, gap, scan, found)


def inverse_sign_check(op, c=None, trials=5, seed=0):
    """For ``lambda_D < 0``: ``(A + diag(c)) v = f`` with random ``f >= 0`` gives ``v <= 0``.

    Returns the largest positive entry over all trials (0 means the property holds).
    """
    rng = np.random.default_rng(seed)
    solver = DirichletSolver(op, c)
    worst = 0.0
    for _ in range(trials):
        f = rng.random(op.n) * (rng.random(op.n) < 0.3)
        v = solver.solve(f)
        worst = max(worst, float(v.max()))
    return worst
