"""Uniform lattices restricted to a domain."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Grid", "make_grid"]


@dataclass(frozen=True, eq=False)
class Grid:
    """Interior nodes ``center + h k`` (``k`` integer) of a domain.

    Exterior nodes are not stored; every solution vector lives on the interior
    nodes and is implicitly zero elsewhere.
    """

    domain: object
    h: float
    index: np.ndarray  # (n, d) integer lattice coordinates
    origin: np.ndarray  # lattice point with index 0 (the domain center)

    @property
    def d(self):
        return self.index.shape[1]

    @property
    def n(self):
        return self.index.shape[0]

    @property
    def cell_volume(self):
        return self.h ** self.d

    @cached_property
    def points(self):
        return self.origin + self.h * self.index

    @cached_property
    def delta(self):
        """Distance of every node to the boundary."""
        return self.domain.boundary_distance(self.points)

    @cached_property
    def center_node(self):
        return int(np.argmin(np.linalg.norm(self.points - self.origin, axis=1)))

    @cached_property
    def _lookup(self):
        lo = self.index.min(axis=0) - 2
        shape = self.index.max(axis=0) + 3 - lo
        table = np.full(tuple(shape), -1, dtype=np.int64)
        table[tuple((self.index - lo).T)] = np.arange(self.n)
        return table, lo

    def node_at(self, k):
        """Node number of lattice index ``k`` (array (..., d)); -1 when exterior."""
        table, lo = self._lookup
        k = np.asarray(k) - lo
        inside = np.all((k >= 0) & (k < np.array(table.shape)), axis=-1)
        out = np.full(k.shape[:-1], -1, dtype=np.int64)
        kk = np.where(inside[..., None], k, 0)
        out[inside] = table[tuple(np.moveaxis(kk[inside], -1, 0))]
        return out

    def mirror(self, axis):
        """Permutation taking node i to its reflection across the center plane ``axis``."""
        k = self.index.copy()
        k[:, axis] *= -1
        return self.node_at(k)

    def swap_axes(self):
        """Permutation for the diagonal reflection ``(x1, x2) -> (x2, x1)``."""
        return self.node_at(self.index[:, ::-1])

    def interpolate(self, u, x):
        """Multilinear interpolation of nodal values ``u`` (zero off the grid)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        f = (x - self.origin) / self.h
        base = np.floor(f).astype(np.int64)
        t = f - base
        out = np.zeros(len(x))
        u = np.asarray(u, dtype=float)
        for corner in np.ndindex(*(2,) * self.d):
            c = np.array(corner)
            w = np.prod(np.where(c == 1, t, 1 - t), axis=1)
            node = self.node_at(base + c)
            vals = np.where(node >= 0, u[np.maximum(node, 0)], 0.0)
            out += w * vals
        return out

    def lp_norm(self, f, p):
        """Discrete ``L^p`` norm with cell-volume weights."""
        f = np.abs(np.asarray(f, dtype=float))
        if p == np.inf:
            return float(f.max())
        return float((self.cell_volume * np.sum(f ** p)) ** (1 / p))


def make_grid(domain, h):
    """Lattice of spacing ``h`` centered at the domain center, kept where it lies inside."""
    if not h > 0:
        raise ValueError("grid spacing must be positive")
    d = domain.d
    if d not in (1, 2):
        raise ValueError("the grid solver supports d in {1, 2}")
    origin = np.array(domain.center, dtype=float)
    kmax = [int(math.floor(e / h)) + 1 for e in domain.extent]
    axes = [np.arange(-k, k + 1) for k in kmax]
    k = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    pts = origin + h * k
    # nodes on the boundary (to roundoff) count as exterior
    keep = domain.boundary_distance_signed(pts) > 1e-9 * h
    if not np.any(keep):
        raise ValueError("grid too coarse: no interior nodes")
    return Grid(domain, float(h), k[keep], origin)
