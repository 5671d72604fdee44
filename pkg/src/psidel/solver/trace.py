"""Boundary traces ``Tr(u/phi)``, the ball trace function H and the overdetermined problem."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..domains import Ball
from ..ladder import gauge_phi
from .assembly import discretize
from .grid import make_grid
from .linear import solve_dirichlet

__all__ = [
    "TraceProfile",
    "trace_profile",
    "boundary_samples",
    "ball_torsion",
    "script_H",
    "AsymmetricTorsion",
    "HypothesisViolated",
    "OverdeterminedVerdict",
    "overdetermined_check",
]

STEPS = (2, 3, 4, 6, 8)  # sample distances in units of h
WINDOWS = ((4, 6, 8), (3, 4, 6, 8), (2, 3, 4, 6, 8))
TIE = 1e-3


class AsymmetricTorsion(RuntimeError):
    pass


class HypothesisViolated(ValueError):
    pass


@dataclass(frozen=True)
class TraceProfile:
    points: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    reliable: np.ndarray
    samples: np.ndarray  # u/phi at the sample distances, one row per point
    levels: np.ndarray  # extrapolated value per window, one row per point

    @property
    def accepted(self):
        """Points whose error estimate is below 5% of the value."""
        return self.reliable & (self.errors < 0.05 * np.abs(self.values))


def boundary_samples(domain, m, start=0.0):
    """``m`` boundary points at equally spaced polar angles around the center."""
    theta = start + 2 * math.pi * np.arange(m) / m
    return theta, domain.boundary_point(theta)


def trace_profile(u, grid, psi, points):
    """Extrapolate ``u / phi(delta)`` to the boundary along inward normals.

    At every boundary point the ratio is sampled at ``delta = (2,3,4,6,8) h``
    (multilinear interpolation).  Each level is the intercept at ``delta = 0``
    of a least-squares line through a window of samples; windows grow from the
    three farthest samples to all five, so the level sequence is a Richardson
    ladder towards the boundary.  The spread of the last two levels is the
    error estimate and a non-monotone level sequence (beyond a 0.1% tie
    tolerance) flags the point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    h = grid.h
    normals = grid.domain.inward_normal(points)
    ds = np.array(STEPS, dtype=float) * h
    phi = gauge_phi(psi, ds)
    q = np.empty((len(points), len(ds)))
    for j, dd in enumerate(ds):
        q[:, j] = grid.interpolate(u, points + dd * normals) / phi[j]
    levels = np.empty((len(points), len(WINDOWS)))
    for w, win in enumerate(WINDOWS):
        cols = [STEPS.index(k) for k in win]
        x = ds[cols]
        X = np.stack([np.ones_like(x), x], axis=1)
        coef, *_ = np.linalg.lstsq(X, q[:, cols].T, rcond=None)
        levels[:, w] = coef[0]
    # steps below TIE (relative) count as ties, not as a change of direction
    diffs = np.diff(levels, axis=1)
    tie = TIE * np.abs(levels[:, -1:])
    monotone = np.all(diffs >= -tie, axis=1) | np.all(diffs <= tie, axis=1)
    values = levels[:, -1]
    errors = np.abs(levels[:, -1] - levels[:, -2])
    return TraceProfile(points, values, errors, monotone, q, levels)


def ball_torsion(psi, radius, resolution=20, d=2):
    """Torsion function on ``Ball(0, radius)`` with ``h = radius / resolution``."""
    dom = Ball((0.0,) * d, float(radius))
    grid = make_grid(dom, radius / resolution)
    op = discretize(psi, grid)
    return grid, solve_dirichlet(op, 0.0, -1.0)


def script_H(r, psi, resolution=20, n_points=16, rtol=0.05):
    """Trace of the torsion function of ``Ball(0, r)``, constant over the sphere.

    The grid spacing scales with the radius (``h = r / resolution``).  Raises
    :class:`AsymmetricTorsion` when the sampled traces differ by more than
    ``rtol`` relative to their mean.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    grid, u = ball_torsion(psi, r, resolution)
    _, pts = boundary_samples(grid.domain, n_points, start=math.pi / (2 * n_points))
    prof = trace_profile(u, grid, psi, pts)
    mean = float(prof.values.mean())
    spread = float(prof.values.max() - prof.values.min())
    if spread > rtol * mean:
        raise AsymmetricTorsion(f"asymmetric torsion (discretization bug): spread {spread / mean:.2%}")
    return mean


@dataclass
class OverdeterminedVerdict:
    consistent: bool
    trace: np.ndarray
    target: np.ndarray
    radii: np.ndarray
    above: list = field(default_factory=list)  # points where q > trace
    below: list = field(default_factory=list)  # points where q < trace
    profile: TraceProfile | None = None


def overdetermined_check(dom, psi, q, h, n_points=16, rtol=0.05, resolution=20, H=None):
    """Test whether the torsion trace on ``dom`` equals ``q(|x|)`` on the boundary.

    The hypothesis that ``q / H`` is nondecreasing is checked on the sampled
    radii, with ``H`` from :func:`script_H` (or a supplied callable).  A point
    disagrees when ``|trace - q|`` exceeds both three error estimates and
    ``rtol * q``; points on either side become witnesses.
    """
    _, pts = boundary_samples(dom, n_points, start=math.pi / (2 * n_points))
    radii = np.linalg.norm(pts, axis=1)
    target = np.array([float(q(r)) for r in radii])
    if np.any(target <= 0):
        raise ValueError("q must be positive")
    H = H or (lambda r: script_H(r, psi, resolution))
    distinct = np.unique(np.round(radii, 12))
    ratio = np.array([float(q(r)) / H(r) for r in distinct])
    if np.any(np.diff(ratio) < -1e-6 * np.abs(ratio[1:])):
        raise HypothesisViolated("hypothesis violated: q/H decreases on the sampled radii")
    grid = make_grid(dom, h)
    u = solve_dirichlet(discretize(psi, grid), 0.0, -1.0)
    prof = trace_profile(u, grid, psi, pts)
    tol = np.maximum(3 * prof.errors, rtol * target)
    gap = target - prof.values
    above = [tuple(p) for p, g, t in zip(pts, gap, tol) if g > t]
    below = [tuple(p) for p, g, t in zip(pts, gap, tol) if g < -t]
    return OverdeterminedVerdict(not above and not below, prof.values, target, radii,
                                 above, below, prof)
