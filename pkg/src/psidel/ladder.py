"""Ladder-height exponent, renewal function and boundary gauge.

The ladder-height exponent of the one-dimensional marginal is

    log Psi~(x) = (1/pi) int_0^inf log Psi(x^2 y^2) / (1 + y^2) dy,

and the renewal function V is the inverse Laplace transform of
``1 / (s Psi~(s))``.  The inversion runs on a Talbot-type contour that enters
the left half-plane, where Psi~ is continued through the Wiener-Hopf relation
``Psi~(s) Psi~(-s) = Psi(-s^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

__all__ = [
    "RenewalProfile",
    "InversionError",
    "LimitNotResolved",
    "ladder_exponent",
    "ladder_exponent_complex",
    "renewal_function",
    "gauge_phi",
    "comparison_constant",
    "comparison_ratio",
    "kappa_limit",
    "KappaResult",
    "talbot_nodes",
]

TALBOT_NODES = 32


class InversionError(RuntimeError):
    """The numerical Laplace inversion produced an implausible renewal function."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class LimitNotResolved(RuntimeError):
    pass


def ladder_exponent(psi, x, rtol=1e-12):
    """Psi~(x) for real ``x > 0`` by adaptive quadrature.

    The integral is split at ``y = 1``; on ``(1, inf)`` the substitution
    ``y -> 1/y`` maps it back to ``(0, 1)``, so both pieces carry only an
    integrable log singularity at the origin.
    """
    if x <= 0:
        raise ValueError("ladder exponent needs x > 0")
    x2 = float(x) ** 2

    def inner(y):
        return math.log(float(psi(x2 * y * y))) / (1 + y * y)

    def outer(u):
        return math.log(float(psi(x2 / (u * u)))) / (1 + u * u)

    total = 0.0
    for f in (inner, outer):
        val, err = integrate.quad(f, 0.0, 1.0, epsabs=0, epsrel=rtol, limit=400)
        if not np.isfinite(val) or err > 1e3 * rtol * max(1.0, abs(val)):
            raise InversionError("ladder exponent quadrature did not converge",
                                 {"x": x, "value": val, "error": err})
        total += val
    return math.exp(total / math.pi)


def _log_ladder_right(psi, s, tol_exp=36.0, width=40.0):
    """log Psi~(s) for ``|arg s| < pi/2`` (vectorized over ``s`` of equal argument).

    With ``y = e^w`` the integral becomes ``int log Psi(s^2 e^{2w}) / (2 cosh w) dw``,
    analytic in the strip ``|Im w| < pi/2 - |arg s|``; the trapezoid rule on that
    strip converges like ``exp(-2 pi d / h)``.
    """
    s = np.asarray(s, dtype=complex)
    arg = float(np.max(np.abs(np.angle(s)))) if s.size else 0.0
    d = max(math.pi / 2 - arg, 1e-3)
    h = 2 * math.pi * d / tol_exp
    n = int(math.ceil(width / h))
    w = np.linspace(-width, width, 2 * n + 1)
    h = w[1] - w[0]
    weight = h / (2 * np.cosh(w)) / math.pi
    z = s[..., None] ** 2 * np.exp(2 * w)
    return np.sum(np.log(psi.complex(z)) * weight, axis=-1)


def ladder_exponent_complex(psi, s):
    """Analytic continuation of Psi~ to ``C \\ (-inf, 0]``.

    All entries of ``s`` must share one argument (true for a contour node
    scaled by different time values).
    """
    s = np.asarray(s, dtype=complex)
    if np.all(s.real >= 0):
        return np.exp(_log_ladder_right(psi, s))
    if np.all(s.real < 0):
        return psi.complex(-s * s) / np.exp(_log_ladder_right(psi, -s))
    raise ValueError("nodes must lie in one half-plane")


def talbot_nodes(n=TALBOT_NODES):
    """Optimized Talbot contour (Weideman 2006) for unit time, midpoint nodes.

    Returns the nodes with ``Im > 0`` and their weights such that
    ``f(t) ~ sum Re(weight * exp(z t) * F(z / t)) / t`` ... with z already scaled
    by n; see :func:`_talbot_invert`.
    """
    if n < 2 or n % 2:
        raise ValueError("the contour needs an even number of nodes")
    theta = -math.pi + (np.arange(n) + 0.5) * 2 * math.pi / n
    a, b, c, mu = 0.5017, 0.6407, 0.2645, 0.6122
    z = n * (-mu + a * theta / np.tan(b * theta) + 1j * c * theta)
    dz = n * (a / np.tan(b * theta) - a * b * theta / np.sin(b * theta) ** 2 + 1j * c)
    keep = theta > 0
    return z[keep], dz[keep]


def _talbot_invert(F_nodes, r, z, dz, n):
    # f(r) = (1/2 pi i) int e^{zr} F(z) dz; conjugate nodes contribute the complex conjugate
    terms = np.exp(z) * F_nodes * dz / r[:, None]
    return (terms.sum(axis=-1) / (1j * n)).real * 2


def renewal_function(psi, r, n=TALBOT_NODES, check=True):
    """Renewal function V at the radii ``r`` (scalar or array)."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0):
        raise ValueError("renewal function needs r > 0")
    z, dz = talbot_nodes(n)
    F = np.empty((r_arr.size, z.size), dtype=complex)
    for k, (zk) in enumerate(z):
        s = zk / r_arr
        F[:, k] = 1.0 / (s * ladder_exponent_complex(psi, s))
    V = _talbot_invert(F, r_arr, z, dz, n)
    if check:
        order = np.argsort(r_arr)
        bad_sign = np.any(V <= 0)
        bad_mono = np.any(np.diff(V[order]) <= 0)
        if bad_sign or not np.all(np.isfinite(V)) or bad_mono:
            raise InversionError("inversion unstable",
                                 {"r": r_arr, "V": V, "nodes": n,
                                  "contour": "Weideman optimized Talbot"})
    return V[0] if np.ndim(r) == 0 else V.reshape(np.shape(r))


def gauge_phi(psi, r):
    """Boundary gauge ``phi(r) = 1 / sqrt(Psi(1/r^2))``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("gauge needs r > 0")
    out = 1.0 / np.sqrt(psi(1.0 / (r * r)))
    return out[()] if out.ndim == 0 else out


def comparison_ratio(psi, r):
    """``V(r) sqrt(Psi(1/r^2)) = V(r) / phi(r)``."""
    return renewal_function(psi, r) / gauge_phi(psi, r)


def comparison_constant(psi, rgrid=None):
    """Smallest ``C`` with ``1/C <= V(r) sqrt(Psi(1/r^2)) <= C`` on ``rgrid``."""
    if rgrid is None:
        rgrid = np.geomspace(1e-3, 1e3, 121)
    rho = comparison_ratio(psi, np.asarray(rgrid, dtype=float))
    if np.any(rho <= 0):
        raise InversionError("non-positive comparison ratio", {"rho": rho})
    return float(np.max(np.maximum(rho, 1.0 / rho)))


@dataclass(frozen=True)
class KappaResult:
    value: float
    levels: np.ndarray
    raw: np.ndarray
    radii: np.ndarray
    order: float | None


def kappa_limit(psi, kmin=8, kmax=16, tol=0.01):
    """Limit of ``V(r)/phi(r)`` as r -> 0 by dyadic Richardson extrapolation.

    The raw ratios on ``r = 2^-k`` are extrapolated with a convergence order
    estimated from successive differences.  When the differences do not shrink
    geometrically (slowly varying corrections) the raw ratios are used as the
    levels.  The last two levels must agree within ``tol``.
    """
    if kmax - kmin < 2:
        raise ValueError("the extrapolation needs at least three radii")
    ks = np.arange(kmin, kmax + 1)
    radii = 2.0 ** (-ks.astype(float))
    raw = comparison_ratio(psi, radii)
    diffs = np.diff(raw)
    scale = np.max(np.abs(raw))
    order = None
    levels = raw.copy()
    if np.all(np.abs(diffs) > 1e-12 * scale):
        q = diffs[1:] / diffs[:-1]
        if np.all((q > 0) & (q < 0.95)):
            order = float(-np.log2(np.median(q)))
            levels = raw[1:] + diffs / (2.0 ** order - 1.0)
    if levels[-1] <= 0:
        raise LimitNotResolved("non-positive limit estimate")
    spread = abs(levels[-1] - levels[-2]) / abs(levels[-1])
    if spread > tol:
        raise LimitNotResolved(
            f"limit not resolved: successive levels differ by {spread:.2%}")
    return KappaResult(float(levels[-1]), levels, raw, radii, order)


@dataclass(frozen=True, eq=False)
class RenewalProfile:
    """Bundle of the ladder exponent, renewal function and gauge of one ``psi``."""

    psi: object
    nodes: int = TALBOT_NODES
    _memo: dict = field(default_factory=dict, repr=False)

    def ladder(self, x):
        return ladder_exponent(self.psi, x)

    def renewal(self, r):
        return renewal_function(self.psi, r, n=self.nodes)

    def gauge(self, r):
        return gauge_phi(self.psi, r)
