"""Convex test domains: balls, axis-aligned boxes and centered ellipses.

Every shape supports vectorized membership, the exact distance to the
boundary, the distance to the boundary along a ray (used for the exterior
mass of the jump kernel), boundary parametrization and inward normals.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Ball", "Box", "Ellipse", "domain_from_descriptor"]


def _points(x, d):
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ValueError(f"points must have {d} coordinates")
    return x


class _Convex:
    d: int

    def contains(self, x):
        return self.boundary_distance_signed(x) > 0

    def boundary_distance(self, x):
        """Distance from ``x`` to the boundary (for points on either side)."""
        return np.abs(self.boundary_distance_signed(x))

    @property
    def diameter(self):
        if self.kind == "box":
            return 2 * math.hypot(*self.extent)
        return 2 * max(self.extent)

    def directions(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.d == 1:
            return np.where(np.cos(theta) >= 0, 1.0, -1.0)[..., None]
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


@dataclass(frozen=True)
class Ball(_Convex):
    center: tuple
    radius: float

    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def d(self):
        return len(self.center)

    @property
    def extent(self):
        return (self.radius,) * self.d

    @property
    def bounding_box(self):
        c = np.array(self.center)
        return tuple(c - self.radius), tuple(c + self.radius)

    def boundary_distance_signed(self, x):
        x = _points(x, self.d)
        return self.radius - np.linalg.norm(x - np.array(self.center), axis=-1)

    def contains(self, x):
        y = _points(x, self.d) - np.array(self.center)
        return np.einsum("...i,...i->...", y, y) < self.radius ** 2

    def ray_exit(self, x, e):
        """Distance from interior points ``x`` to the boundary along unit vectors ``e``."""
        y = _points(x, self.d) - np.array(self.center)
        b = np.sum(y * e, axis=-1)
        c = np.sum(y * y, axis=-1) - self.radius ** 2
        return -b + np.sqrt(np.maximum(b * b - c, 0.0))

    def boundary_point(self, theta):
        return np.array(self.center) + self.radius * self.directions(theta)

    def inward_normal(self, p):
        p = _points(p, self.d)
        v = np.array(self.center) - p
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def corner_angles(self, x):
        return np.empty((len(x), 0))

    def descriptor(self):
        return {"shape": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box(_Convex):
    lo: tuple
    hi: tuple

    kind = "box"

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("box needs lo < hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self):
        return len(self.lo)

    @property
    def center(self):
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    @property
    def extent(self):
        return tuple((b - a) / 2 for a, b in zip(self.lo, self.hi))

    @property
    def bounding_box(self):
        return self.lo, self.hi

    def boundary_distance_signed(self, x):
        x = _points(x, self.d)
        lo, hi = np.array(self.lo), np.array(self.hi)
        inside = np.minimum(x - lo, hi - x)  # per-coordinate slack
        m = inside.min(axis=-1)
        # outside: Euclidean distance to the box
        gap = np.maximum(np.maximum(lo - x, x - hi), 0.0)
        return np.where(m > 0, m, -np.linalg.norm(gap, axis=-1) if self.d > 1 else m)

    def contains(self, x):
        x = _points(x, self.d)
        return np.all((x > np.array(self.lo)) & (x < np.array(self.hi)), axis=-1)

    def ray_exit(self, x, e):
        x = _points(x, self.d)
        lo, hi = np.array(self.lo), np.array(self.hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(e > 0, (hi - x) / e, np.where(e < 0, (lo - x) / e, np.inf))
        return t.min(axis=-1)

    @property
    def corners(self):
        return np.array(list(itertools.product(*zip(self.lo, self.hi))), dtype=float)

    def corner_angles(self, x):
        """Angles at which rays from ``x`` (shape (n, 2)) hit a corner."""
        if self.d != 2:
            return np.empty((len(x), 0))
        v = self.corners[None, :, :] - np.asarray(x)[:, None, :]
        return np.mod(np.arctan2(v[..., 1], v[..., 0]), 2 * math.pi)

    def boundary_point(self, theta):
        """Point where the ray from the center at angle ``theta`` meets the boundary."""
        e = self.directions(theta)
        c = np.broadcast_to(np.array(self.center), e.shape)
        return c + self.ray_exit(c, e)[..., None] * e

    def inward_normal(self, p):
        p = _points(p, self.d)
        lo, hi = np.array(self.lo), np.array(self.hi)
        dist = np.concatenate([p - lo, hi - p], axis=-1)
        face = np.argmin(dist, axis=-1)
        n = np.zeros_like(p)
        axis = face % self.d
        sign = np.where(face < self.d, 1.0, -1.0)
        n[np.arange(len(p)), axis] = sign
        return n

    def descriptor(self):
        return {"shape": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class Ellipse(_Convex):
    """Ellipse ``(x/a)^2 + (y/b)^2 < 1`` around ``center``, axes along the coordinates."""

    a: float
    b: float
    center: tuple = (0.0, 0.0)

    kind = "ellipse"
    d = 2

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("ellipse semi-axes must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 2:
            raise ValueError("ellipse lives in the plane")

    @property
    def extent(self):
        return (self.a, self.b)

    @property
    def bounding_box(self):
        cx, cy = self.center
        return (cx - self.a, cy - self.b), (cx + self.a, cy + self.b)

    def boundary_distance_signed(self, x):
        y = _points(x, 2) - np.array(self.center)
        inside = (y[..., 0] / self.a) ** 2 + (y[..., 1] / self.b) ** 2 < 1
        dist = _ellipse_distance(self.a, self.b, y[..., 0], y[..., 1])
        return np.where(inside, dist, -dist)

    def contains(self, x):
        y = _points(x, 2) - np.array(self.center)
        return (y[..., 0] / self.a) ** 2 + (y[..., 1] / self.b) ** 2 < 1

    def ray_exit(self, x, e):
        y = _points(x, 2) - np.array(self.center)
        s = np.array([1 / self.a, 1 / self.b])
        ys, es = y * s, e * s
        A = np.sum(es * es, axis=-1)
        B = np.sum(ys * es, axis=-1)
        C = np.sum(ys * ys, axis=-1) - 1
        return (-B + np.sqrt(np.maximum(B * B - A * C, 0.0))) / A

    def boundary_point(self, theta):
        """Point at polar angle ``theta`` as seen from the center."""
        e = self.directions(theta)
        c = np.broadcast_to(np.array(self.center), e.shape)
        return c + self.ray_exit(c, e)[..., None] * e

    def inward_normal(self, p):
        y = _points(p, 2) - np.array(self.center)
        g = y / np.array([self.a ** 2, self.b ** 2])
        return -g / np.linalg.norm(g, axis=-1, keepdims=True)

    def corner_angles(self, x):
        return np.empty((len(x), 0))

    def descriptor(self):
        return {"shape": "ellipse", "a": self.a, "b": self.b, "center": list(self.center)}


def _ellipse_distance(a, b, x, y):
    """Euclidean distance from points to the ellipse curve.

    The closest point is ``(a^2 x/(t+a^2), b^2 y/(t+b^2))`` with ``t`` the
    unique root of a monotone secular equation; it is found by bisection,
    which is vectorized and converges to the last bit.
    """
    x, y = np.broadcast_arrays(np.abs(np.asarray(x, float)), np.abs(np.asarray(y, float)))
    swap = a < b
    e0, e1 = (b, a) if swap else (a, b)
    y0, y1 = (y, x) if swap else (x, y)
    y0, y1 = np.array(y0, dtype=float), np.array(y1, dtype=float)
    # snap points within 1e-10 of an axis onto it: the bisection bracket below
    # starts at z1 and would need too many halvings (error at most 1e-10)
    y0[y0 < 1e-10 * e1] = 0.0
    y1[y1 < 1e-10 * e1] = 0.0
    out = np.empty(np.broadcast(y0, y1).shape)

    gen = (y1 > 0) & (y0 > 0)
    if np.any(gen):
        z0, z1 = y0[gen] / e0, y1[gen] / e1
        g = z0 * z0 + z1 * z1 - 1
        r0 = (e0 / e1) ** 2
        # root of F(t) = (r0 z0/(t + r0 - 1))^2 + (z1/t)^2 - 1, t = s + 1 keeps the
        # bracket away from cancellation near the axes
        lo = z1
        hi = np.where(g < 0, 1.0, np.hypot(r0 * z0, z1))
        for _ in range(160):
            t = (lo + hi) / 2
            f = (r0 * z0 / (t + r0 - 1)) ** 2 + (z1 / t) ** 2 - 1
            pos = f > 0
            lo = np.where(pos, t, lo)
            hi = np.where(pos, hi, t)
        t = (lo + hi) / 2
        x0 = r0 * y0[gen] / (t + r0 - 1)
        x1 = y1[gen] / t
        out[gen] = np.hypot(x0 - y0[gen], x1 - y1[gen])

    axis1 = (y0 == 0) & ~gen  # on the minor axis
    out[axis1] = np.abs(y1[axis1] - e1)

    axis0 = (y1 == 0) & (y0 > 0)
    if np.any(axis0):
        p = y0[axis0]
        num = e0 * p
        den = e0 * e0 - e1 * e1
        inner = num < den
        xq = np.where(inner, e0 * num / np.where(den > 0, den, 1), e0)
        x1 = np.where(inner, e1 * np.sqrt(np.maximum(1 - (xq / e0) ** 2, 0)), 0.0)
        out[axis0] = np.where(inner, np.hypot(xq - p, x1), np.abs(p - e0))
    return out


def domain_from_descriptor(desc):
    """Build a domain from a plain dict such as ``{"shape": "ball", "radius": 1}``."""
    desc = dict(desc)
    shape = desc.pop("shape", None)
    try:
        if shape == "ball":
            d = int(desc.pop("d", 2))
            center = desc.pop("center", [0.0] * d)
            dom = Ball(tuple(center), float(desc.pop("radius", 1.0)))
        elif shape == "box":
            dom = Box(tuple(desc.pop("lo")), tuple(desc.pop("hi")))
        elif shape == "ellipse":
            dom = Ellipse(float(desc.pop("a")), float(desc.pop("b")),
                          tuple(desc.pop("center", (0.0, 0.0))))
        else:
            raise ValueError(f"unknown domain shape {shape!r}")
    except KeyError as exc:
        raise ValueError(f"domain descriptor missing {exc}") from None
    if desc:
        raise ValueError(f"unknown domain keys {sorted(desc)}")
    return dom
