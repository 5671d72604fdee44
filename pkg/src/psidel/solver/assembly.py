"""Dense lattice discretization of the generator ``-Psi(-Delta)`` with zero exterior data.

For a node ``x_i`` the generator is split at the radius ``delta = 2h``:

* jumps longer than ``delta`` to other interior nodes use the cell-midpoint
  weights ``h^d j(|x_i - x_j|)``;
* jumps longer than ``delta`` that leave the domain only remove mass, and that
  mass is integrated exactly along rays from ``x_i`` (this also covers the whole
  far tail of the kernel, so nothing is truncated);
* jumps shorter than ``delta`` act like diffusion with coefficient
  ``(1/2) int_{|z| <= delta} z_1^2 j(|z|) dz``, discretized by the standard
  Laplacian stencil with zero exterior values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..bernstein import _sphere_area, jump_kernel

__all__ = ["OperatorMatrix", "discretize", "exterior_mass", "kernel_for"]


@lru_cache(maxsize=64)
def kernel_for(psi, d):
    """Jump kernel of ``psi`` in dimension ``d`` (cached: kernels are immutable)."""
    return jump_kernel(psi, d)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    grid: object
    psi: object
    A: np.ndarray  # dense (n, n), symmetric
    kill: np.ndarray  # exact exterior mass beyond the split radius, per node
    diffusion: float  # near-origin diffusion coefficient
    split: float
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.A.shape[0]

    def apply(self, u):
        return self.A @ u

    def with_c(self, c):
        """Dense matrix of ``A + diag(c)``."""
        M = self.A.copy()
        if c is not None:
            M[np.diag_indices_from(M)] += np.broadcast_to(np.asarray(c, dtype=float), (self.n,))
        return M

    def near_exterior(self):
        """Near-field exterior loss per node: the Laplacian stencil legs that leave the grid."""
        h = self.grid.h
        return self.diffusion * self.meta["exterior_legs"] / h ** 2


def _offset_table(kern, grid, split):
    """``h^d j(h |m|)`` on all lattice offsets ``m`` spanned by the grid (0 inside the split)."""
    span = grid.index.max(axis=0) - grid.index.min(axis=0)
    axes = [np.arange(-s, s + 1) for s in span]
    m = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    r = grid.h * np.linalg.norm(m, axis=-1)
    far = r > split * (1 + 1e-12)
    table = np.zeros(r.shape)
    table[far] = grid.cell_volume * kern(r[far])
    return table, span


def exterior_mass(kern, domain, points, split, panels=128, order=16):
    """``int_{|z| > split, x + z outside D} j(|z|) dz`` for every point of a convex domain.

    Along the direction ``theta`` the exterior starts at the ray-exit distance
    ``rho(theta)``, so the mass is ``int T(max(split, rho(theta))) dtheta`` with
    ``T(R) = int_R^inf r^{d-1} j(r) dr``.  In the plane the angular integral is
    composite Gauss-Legendre; panel edges are added at box corners and where
    ``rho(theta) = split``, the only places where the integrand has kinks.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = points.shape[1]
    if d == 1:
        out = np.zeros(len(points))
        for e in (1.0, -1.0):
            rho = domain.ray_exit(points, np.full((len(points), 1), e))
            out += kern.tail_mass(np.maximum(split, rho))
        return out
    x, w = np.polynomial.legendre.leggauss(order)
    base = np.linspace(0.0, 2 * math.pi, panels + 1)

    def integrate(pt_block, edges):
        a, b = edges[:-1], edges[1:]
        th = ((a + b)[:, None] + (b - a)[:, None] * x) / 2
        wt = ((b - a)[:, None] / 2 * w).ravel()
        th = th.ravel()
        e = np.stack([np.cos(th), np.sin(th)], axis=-1)
        rho = np.stack([domain.ray_exit(np.broadcast_to(p, e.shape), e) for p in pt_block])
        return kern.tail_mass(np.maximum(split, rho)) @ wt

    near = domain.boundary_distance(points) < split
    corners = domain.corner_angles(points)
    special = near | (corners.shape[1] > 0)
    out = np.empty(len(points))
    plain = np.flatnonzero(~special)
    for chunk in np.array_split(plain, max(1, len(plain) // 256)):
        if chunk.size:
            out[chunk] = integrate(points[chunk], base)
    for i in np.flatnonzero(special):
        extra = list(corners[i])
        if near[i]:
            extra += list(_crossings(domain, points[i], split))
        edges = np.unique(np.concatenate([base, np.mod(extra, 2 * math.pi)]))
        out[i] = integrate(points[i:i + 1], edges)[0]
    return out


def _crossings(domain, p, split, samples=4096):
    """Angles where the ray-exit distance from ``p`` equals ``split``."""
    th = np.linspace(0.0, 2 * math.pi, samples + 1)
    e = np.stack([np.cos(th), np.sin(th)], axis=-1)
    g = domain.ray_exit(np.broadcast_to(p, e.shape), e) - split
    idx = np.flatnonzero(np.sign(g[:-1]) != np.sign(g[1:]))
    lo, hi = th[idx], th[idx + 1]
    glo = g[idx]
    for _ in range(60):
        mid = (lo + hi) / 2
        em = np.stack([np.cos(mid), np.sin(mid)], axis=-1)
        gm = domain.ray_exit(np.broadcast_to(p, em.shape), em) - split
        same = np.sign(gm) == np.sign(glo)
        lo, hi, glo = np.where(same, mid, lo), np.where(same, hi, mid), np.where(same, gm, glo)
    return (lo + hi) / 2


def _laplacian_legs(grid):
    """Neighbor lists of the (2d+1)-point stencil and the count of exterior legs."""
    pairs = []
    legs = np.zeros(grid.n)
    for ax in range(grid.d):
        for s in (-1, 1):
            k = grid.index.copy()
            k[:, ax] += s
            nb = grid.node_at(k)
            inside = nb >= 0
            pairs.append((np.flatnonzero(inside), nb[inside]))
            legs += ~inside
    return pairs, legs


def discretize(psi, grid):
    """Assemble the dense operator matrix for ``psi`` on ``grid``."""
    h, d = grid.h, grid.d
    split = 2 * h
    kern = kernel_for(psi, d)
    table, span = _offset_table(kern, grid, split)
    n = grid.n
    A = np.empty((n, n))
    flat = table.ravel()
    strides = np.array([np.prod(table.shape[i + 1:]) for i in range(d)], dtype=np.int64)
    idx = grid.index.astype(np.int64)
    rows = max(1, 2_000_000 // n)
    for start in range(0, n, rows):
        block = idx[start:start + rows]
        off = (block[:, None, :] - idx[None, :, :] + span) @ strides
        A[start:start + rows] = flat[off]
    np.fill_diagonal(A, 0.0)
    rowsum = A.sum(axis=1)

    coeff = _sphere_area(d) / (2 * d) * kern.radial_moment(d + 1, 0.0, split)
    pairs, legs = _laplacian_legs(grid)
    for i, j in pairs:
        A[i, j] += coeff / h ** 2
    kill = exterior_mass(kern, grid.domain, grid.points, split)
    diag = -rowsum - 2 * d * coeff / h ** 2 - kill
    A[np.diag_indices(n)] += diag
    meta = {"exterior_legs": legs, "tail": "exact ray integral",
            "kernel_r_max": kern.r_max}
    return OperatorMatrix(grid, psi, A, kill, coeff, split, meta)
