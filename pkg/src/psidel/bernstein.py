"""Catalog of Bernstein functions, their subordinator Levy densities and the
radial jump kernel of the associated subordinate Brownian motion.

Every catalog member ``psi`` is a complete Bernstein function with zero drift,
so it extends analytically to ``C \\ (-inf, 0]``; :meth:`BernsteinFunction.complex`
exposes that extension (it is needed by the Laplace inversion in
:mod:`psidel.ladder`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import CubicSpline

__all__ = [
    "BernsteinFunction",
    "Stable",
    "Relativistic",
    "SumStable",
    "LogDamped",
    "LogBoosted",
    "ScalingCertificate",
    "ScalingReport",
    "DensityUnavailable",
    "QuadratureError",
    "LevyDensity",
    "JumpKernel",
    "eval_psi",
    "check_scaling",
    "default_scaling_grid",
    "subordinator_levy_density",
    "laplace_identity_residual",
    "jump_kernel",
    "verify_symbol",
    "tail_ratio_constant",
    "catalog_certificates",
    "from_descriptor",
]

KINDS = ("stable", "relativistic", "sum_stable", "log_damped", "log_boosted")


class DensityUnavailable(ValueError):
    """Raised when no Levy density can be produced for a catalog member."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _clog1p(z):
    # numpy's complex log1p is log(1 + z) and loses tiny arguments
    small = np.abs(z) < 1e-3
    zs = np.where(small, z, 0)
    series = zs * (1 - zs * (1 / 2 - zs * (1 / 3 - zs * (1 / 4 - zs / 5))))
    return np.where(small, series, np.log(1 + np.where(small, 0, z)))


def _cexpm1(w):
    small = np.abs(w) < 1e-3
    ws = np.where(small, w, 0)
    series = ws * (1 + ws / 2 * (1 + ws / 3 * (1 + ws / 4 * (1 + ws / 5))))
    return np.where(small, series, np.exp(np.where(small, 0, w)) - 1)


@dataclass(frozen=True)
class BernsteinFunction:
    """A member of the closed five-family catalog.

    ``alpha`` and ``beta`` are the family parameters as they appear in the
    formulas (``Psi(x) = x**(alpha/2)`` etc.); ``mass`` is the relativistic
    rest mass.  Use the factory functions :func:`Stable`, :func:`Relativistic`,
    ... rather than calling the constructor directly.
    """

    kind: str
    alpha: float
    beta: float = 0.0
    mass: float = 0.0
    drift: float = 0.0

    def __post_init__(self):
        a, b, m = self.alpha, self.beta, self.mass
        if self.kind not in KINDS:
            raise ValueError(f"unknown Bernstein family {self.kind!r}")
        if self.drift != 0.0:
            raise ValueError("only zero-drift Bernstein functions are supported")
        ok = {
            "stable": 0 < a <= 2,
            "relativistic": 0 < a < 2 and m > 0,
            "sum_stable": 0 < a <= 2 and 0 < b <= 2,
            "log_damped": 0 < a <= 2 and 0 <= b < a,
            "log_boosted": 0 < a < 2 and 0 < b < 2 - a,
        }[self.kind]
        if not ok:
            raise ValueError(f"parameters out of range for {self.kind}: "
                             f"alpha={a}, beta={b}, m={m}")

    # -- evaluation -----------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("Psi is evaluated on [0, inf) only")
        a2, b2 = self.alpha / 2, self.beta / 2
        with np.errstate(divide="ignore"):
            if self.kind == "stable":
                out = x ** a2
            elif self.kind == "relativistic":
                lam = self.lam
                # (x + lam)^a - lam^a without cancellation for small x
                out = lam ** a2 * np.expm1(a2 * np.log1p(x / lam))
            elif self.kind == "sum_stable":
                out = x ** a2 + x ** b2
            elif self.kind == "log_damped":
                xs = np.where(x > 0, x, 1.0)
                out = np.where(x > 0, xs ** a2 * np.log1p(xs) ** (-b2), 0.0)
            else:
                out = x ** a2 * np.log1p(x) ** b2
        return out[()] if out.ndim == 0 else out

    def complex(self, z):
        """Analytic continuation of Psi to ``C \\ (-inf, 0]`` (principal branches)."""
        z = np.asarray(z, dtype=complex)
        a2, b2 = self.alpha / 2, self.beta / 2
        if self.kind == "stable":
            return z ** a2
        if self.kind == "relativistic":
            lam = self.lam
            return lam ** a2 * _cexpm1(a2 * _clog1p(z / lam))
        if self.kind == "sum_stable":
            return z ** a2 + z ** b2
        log1z = _clog1p(z)
        if self.kind == "log_damped":
            return z ** a2 * log1z ** (-b2)
        return z ** a2 * log1z ** b2

    def im_on_cut(self, s):
        """``Im Psi(-s + i0)`` for ``s > 0``: the Stieltjes spectral density times pi*s."""
        s = np.asarray(s, dtype=float)
        a2, b2 = self.alpha / 2, self.beta / 2
        if self.kind in ("stable", "sum_stable"):
            out = s ** a2 * math.sin(math.pi * a2)
            if self.kind == "sum_stable":
                out = out + s ** b2 * math.sin(math.pi * b2)
            return out
        if self.kind == "relativistic":
            lam = self.lam
            return np.where(s > lam, (s - lam) ** a2 * math.sin(math.pi * a2), 0.0)
        # log(1 + z) at z = -s + i0; imaginary part is +0 below s = 1 and pi above
        with np.errstate(divide="ignore"):
            re = np.where(s < 1, np.log1p(-np.minimum(s, 1.0)), np.log(np.abs(s - 1.0)))
        im = np.where(s > 1, math.pi, 0.0)
        mod, arg = np.hypot(re, im), np.arctan2(im, re)
        e = -b2 if self.kind == "log_damped" else b2
        with np.errstate(divide="ignore", invalid="ignore"):
            val = s ** a2 * mod ** e * np.sin(math.pi * a2 + e * arg)
        return np.where(np.isfinite(val), val, 0.0)

    # -- metadata -------------------------------------------------------------
    @property
    def lam(self):
        """Exponential tilt ``m**(2/alpha)`` of the relativistic family."""
        return self.mass ** (2.0 / self.alpha)

    @property
    def has_drift_part(self):
        """True when a stable component has alpha = 2, i.e. Psi has a linear part."""
        if self.kind == "stable":
            return self.alpha == 2
        if self.kind == "log_damped":
            return self.alpha == 2 and self.beta == 0
        if self.kind == "sum_stable":
            return self.alpha == 2 or self.beta == 2
        return False

    @property
    def exact_density(self):
        return self.kind in ("stable", "relativistic", "sum_stable")

    @property
    def lower_exponent(self):
        """Lower scaling exponent listed for the family."""
        a2, b2 = self.alpha / 2, self.beta / 2
        return {"stable": a2, "relativistic": a2, "sum_stable": min(a2, b2),
                "log_damped": a2 - b2, "log_boosted": a2}[self.kind]

    @property
    def upper_exponent(self):
        a2, b2 = self.alpha / 2, self.beta / 2
        return {"stable": a2, "relativistic": 1.0, "sum_stable": max(a2, b2),
                "log_damped": a2, "log_boosted": a2 + b2}[self.kind]

    def descriptor(self):
        d = {"kind": self.kind, "alpha": self.alpha}
        if self.kind == "relativistic":
            d["m"] = self.mass
        elif self.kind != "stable":
            d["beta"] = self.beta
        return d

    def __str__(self):
        if self.kind == "stable":
            return f"Stable({self.alpha:g})"
        if self.kind == "relativistic":
            return f"Relativistic({self.alpha:g}, {self.mass:g})"
        name = {"sum_stable": "SumStable", "log_damped": "LogDamped",
                "log_boosted": "LogBoosted"}[self.kind]
        return f"{name}({self.alpha:g}, {self.beta:g})"


def Stable(alpha):
    return BernsteinFunction("stable", float(alpha))


def Relativistic(alpha, m):
    return BernsteinFunction("relativistic", float(alpha), mass=float(m))


def SumStable(alpha, beta):
    return BernsteinFunction("sum_stable", float(alpha), float(beta))


def LogDamped(alpha, beta):
    return BernsteinFunction("log_damped", float(alpha), float(beta))


def LogBoosted(alpha, beta):
    return BernsteinFunction("log_boosted", float(alpha), float(beta))


_FACTORIES = {
    "stable": lambda p: Stable(p["alpha"]),
    "relativistic": lambda p: Relativistic(p["alpha"], p["m"]),
    "sum_stable": lambda p: SumStable(p["alpha"], p["beta"]),
    "log_damped": lambda p: LogDamped(p["alpha"], p["beta"]),
    "log_boosted": lambda p: LogBoosted(p["alpha"], p["beta"]),
}


def from_descriptor(desc):
    """Build a catalog member from ``{"kind": ..., "alpha": ..., ...}``."""
    desc = dict(desc)
    kind = desc.pop("kind", None)
    if kind not in _FACTORIES:
        raise ValueError(f"unknown Bernstein family {kind!r}")
    allowed = {"stable": {"alpha"}, "relativistic": {"alpha", "m"}}.get(kind, {"alpha", "beta"})
    extra = set(desc) - allowed
    if extra:
        raise ValueError(f"unexpected parameters for {kind}: {sorted(extra)}")
    missing = allowed - set(desc)
    if missing:
        raise ValueError(f"missing parameters for {kind}: {sorted(missing)}")
    return _FACTORIES[kind]({k: float(v) for k, v in desc.items()})


def eval_psi(psi, x):
    return psi(x)


# ---------------------------------------------------------------------------
# weak scaling certificates
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ScalingCertificate:
    side: str
    exponent: float
    constant: float = 1.0
    threshold: float = 0.0

    def __post_init__(self):
        if self.side not in ("lower", "upper"):
            raise ValueError("side must be 'lower' or 'upper'")
        if self.exponent <= 0:
            raise ValueError("scaling exponent must be positive")
        if self.side == "lower" and not 0 < self.constant <= 1:
            raise ValueError("lower scaling constant must lie in (0, 1]")
        if self.side == "upper" and self.constant < 1:
            raise ValueError("upper scaling constant must be >= 1")
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")


@dataclass(frozen=True)
class ScalingReport:
    holds: bool
    worst_ratio: float
    witness: tuple | None


def default_scaling_grid(threshold=0.0, per_decade=64):
    """x-gamma lattice covering ``(theta, 1e6 max(theta, 1)]`` and ``[1, 1e4]``."""
    top = 1e6 * max(threshold, 1.0)
    bottom = threshold if threshold > 0 else 1e-6
    n_x = int(np.ceil(np.log10(top / bottom) * per_decade)) + 1
    xs = np.geomspace(bottom, top, n_x)
    if threshold > 0:
        xs = xs[xs > threshold]
    gammas = np.geomspace(1.0, 1e4, 4 * per_decade + 1)
    return xs, gammas


def check_scaling(psi, cert, grid=None, rtol=1e-12):
    """Validate a weak scaling certificate on a finite lattice.

    ``worst_ratio`` is ``min Psi(gx) / (c g^mu Psi(x))`` for a lower certificate
    and the corresponding max for an upper one, so the certificate holds when
    it is >= 1 (lower) or <= 1 (upper), up to ``rtol``.
    """
    xs, gammas = default_scaling_grid(cert.threshold) if grid is None else grid
    xs = np.asarray(xs, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if xs.size == 0 or gammas.size == 0:
        raise ValueError("degenerate grid")
    X, G = np.meshgrid(xs, gammas, indexing="ij")
    ratio = psi(G * X) / (cert.constant * G ** cert.exponent * psi(X))
    if cert.side == "lower":
        idx = np.unravel_index(np.argmin(ratio), ratio.shape)
        holds = bool(ratio[idx] >= 1 - rtol)
    else:
        idx = np.unravel_index(np.argmax(ratio), ratio.shape)
        holds = bool(ratio[idx] <= 1 + rtol)
    witness = None if holds else (float(X[idx]), float(G[idx]))
    return ScalingReport(holds, float(ratio[idx]), witness)


def catalog_certificates(psi):
    """The (mu, c, theta) certificates listed for each family.

    All constants are 1 except the relativistic upper certificate with exponent
    alpha/2, which needs ``c = theta^(alpha/2) / Psi(theta)``; here theta = 1.
    """
    lo = ScalingCertificate("lower", psi.lower_exponent, 1.0, 0.0)
    up = ScalingCertificate("upper", psi.upper_exponent, 1.0, 0.0)
    certs = [lo, up]
    if psi.kind == "relativistic":
        theta = 1.0
        c = theta ** (psi.alpha / 2) / float(psi(theta))
        certs.append(ScalingCertificate("upper", psi.alpha / 2, c, theta))
    return certs


# ---------------------------------------------------------------------------
# subordinator Levy density
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LevyDensity:
    """Density ``t -> m(t)`` of the subordinator's Levy measure."""

    psi: BernsteinFunction

    @property
    def exact(self):
        return self.psi.exact_density

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        psi = self.psi
        if psi.exact_density:
            out = _stable_density(psi.alpha / 2, t)
            if psi.kind == "relativistic":
                out = out * np.exp(-psi.lam * t)
            elif psi.kind == "sum_stable":
                out = out + _stable_density(psi.beta / 2, t)
            return out
        return np.vectorize(self._stieltjes, otypes=[float])(t)

    def log_density(self, t):
        """``log m(t)`` for the closed-form families (no underflow for large t)."""
        psi = self.psi
        a = psi.alpha / 2
        out = math.log(a / math.gamma(1 - a)) - (1 + a) * math.log(t)
        if psi.kind == "relativistic":
            return out - psi.lam * t
        if psi.kind == "sum_stable" and psi.beta / 2 < 1:
            b = psi.beta / 2
            other = math.log(b / math.gamma(1 - b)) - (1 + b) * math.log(t)
            return np.logaddexp(out, other)
        if psi.kind in ("stable", "sum_stable"):
            return out
        return math.log(float(self(t)))

    def _stieltjes(self, t):
        # m(t) = (1/pi) int_0^inf exp(-t s) Im Psi(-s + i0) ds
        top = max(4.0, 80.0 / t)
        total = _cut_integral(self.psi, lambda s: np.exp(-t * s), top, min(1e-26, 1e-14 / t))
        if not np.isfinite(total) or total <= 0:
            raise DensityUnavailable(f"density unavailable for {self.psi} at t={t}")
        return total / math.pi


_GL = np.polynomial.legendre.leggauss(24)


def _panel_nodes(a, b, width=1.0):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    n = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, n + 1)
    mid, half = (edges[:-1] + edges[1:]) / 2, (edges[1:] - edges[:-1]) / 2
    x, w = _GL
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _cut_integral(psi, g, top, bottom=None):
    """``int_0^top Im Psi(-s + i0) g(s) ds`` with fixed composite quadrature.

    Away from s = 1 the variable is ``log s``; on (1/2, 2) it is ``log|1 - s|``,
    which flattens the logarithmic singularity of the log-modified families.
    """
    u_lo = math.log(bottom) if bottom else -60.0
    u_lo = min(u_lo, math.log(0.5) - 1)
    pieces = []
    u, w = _panel_nodes(u_lo, math.log(0.5))
    pieces.append((np.exp(u), w * np.exp(u)))
    v, w = _panel_nodes(-60.0, math.log(0.5))
    pieces.append((1 - np.exp(v), w * np.exp(v)))
    v, w = _panel_nodes(-60.0, 0.0)
    pieces.append((1 + np.exp(v), w * np.exp(v)))
    if top > 2:
        u, w = _panel_nodes(math.log(2.0), math.log(top))
        pieces.append((np.exp(u), w * np.exp(u)))
    s = np.concatenate([p[0] for p in pieces])
    w = np.concatenate([p[1] for p in pieces])
    return float(np.sum(w * psi.im_on_cut(s) * g(s)))


def _power_end(m, t, power, head):
    """``int t^power m(t) dt`` over (0, t] (head) or [t, inf), m continued as a power law."""
    m0, m1 = float(m(t)), float(m(t * 1.01))
    if m0 == 0.0 or m1 == 0.0:
        return 0.0
    p = -math.log(m1 / m0) / math.log(1.01)
    e = power + 1 - p
    return m0 * t ** (power + 1) / (e if head else -e)


def _stable_density(a, t):
    if a >= 1:
        return np.zeros_like(t)
    return a / math.gamma(1 - a) * t ** (-1 - a)


def subordinator_levy_density(psi):
    """Levy density of the subordinator with Laplace exponent ``psi``.

    The three power-type families have closed forms.  The two log-modified
    families are recovered by Stieltjes inversion,
    ``m(t) = (1/pi) int_0^inf e^{-ts} Im Psi(-s + i0) ds``, and are flagged as
    approximate via ``LevyDensity.exact``.
    """
    if psi.has_drift_part:
        raise DensityUnavailable(
            f"density unavailable: {psi} has a Brownian (alpha = 2) component")
    return LevyDensity(psi)


def laplace_identity_residual(psi, x, density=None):
    """Relative residual of ``int (1 - e^{-xt}) m(t) dt = Psi(x)``."""
    m = subordinator_levy_density(psi) if density is None else density

    def integrand(u):
        t = math.exp(u)
        return -math.expm1(-x * t) * float(m(t)) * t

    # integrand in log t peaks near t = 1/x; outside [t0, t1] use power-law ends
    u0 = -math.log(x)
    lo, hi = u0 - 30, u0 + 60
    val = 0.0
    for a, b in zip(np.linspace(lo, hi, 10)[:-1], np.linspace(lo, hi, 10)[1:]):
        v, _ = integrate.quad(integrand, a, b, epsabs=0, epsrel=1e-11, limit=200)
        val += v
    t0, t1 = math.exp(lo), math.exp(hi)
    val += x * _power_end(m, t0, 1.0, head=True)  # 1 - e^{-xt} ~ xt
    val += _power_end(m, t1, 0.0, head=False)
    target = float(psi(x))
    return abs(val - target) / target


# ---------------------------------------------------------------------------
# jump kernel
# ---------------------------------------------------------------------------
_SPHERE = {1: 2.0, 2: 2 * math.pi}  # surface measure of S^{d-1}


def _sphere_area(d):
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True, eq=False)
class JumpKernel:
    """Radial Levy density ``r -> j(r)`` of the subordinate process in R^d.

    ``exact(r)`` runs adaptive quadrature for every radius; calling the kernel
    uses a log-log cubic spline of exact samples on ``[r_min, r_max]`` (about
    1e-8 relative accuracy) with power-law continuation beyond both ends.
    """

    psi: BernsteinFunction
    d: int
    r_min: float = 1e-8
    r_max: float = 1e5
    per_decade: int = 24
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def exact(self, r):
        r = np.asarray(r, dtype=float)
        out = np.array([_kernel_value(self.psi, self.d, float(x)) for x in r.ravel()])
        out = out.reshape(r.shape)
        return out[()] if out.ndim == 0 else out

    @cached_property
    def grid(self):
        n = int(round(np.log10(self.r_max / self.r_min) * self.per_decade)) + 1
        rs = np.geomspace(self.r_min, self.r_max, n)
        return rs, self.exact(rs)

    @cached_property
    def _spline(self):
        rs, js = self.grid
        if np.any(js <= 0) or not np.all(np.isfinite(js)):
            raise QuadratureError("non-positive kernel samples", {"samples": js})
        lr, lj = np.log(rs), np.log(js)
        # tail exponents for extrapolation, from the last few samples
        lo_slope = (lj[3] - lj[0]) / (lr[3] - lr[0])
        hi_slope = (lj[-1] - lj[-4]) / (lr[-1] - lr[-4])
        return CubicSpline(lr, lj), lo_slope, hi_slope

    @property
    def samples(self):
        return self.grid

    @property
    def tail_exponent(self):
        """Effective power ``p`` with ``j(r) ~ r^{-p}`` beyond ``r_max``."""
        return -self._spline[2]

    @property
    def origin_exponent(self):
        return -self._spline[1]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        spl, s0, s1 = self._spline
        lr = np.log(r)
        lo, hi = math.log(self.r_min), math.log(self.r_max)
        inner = spl(np.clip(lr, lo, hi))
        out = np.where(lr < lo, spl(lo) + s0 * (lr - lo),
                       np.where(lr > hi, spl(hi) + s1 * (lr - hi), inner))
        out = np.exp(out)
        return out[()] if out.ndim == 0 else out

    def radial_moment(self, power, lo, hi):
        """``int_lo^hi r^power j(r) dr`` using the interpolant (hi may be inf)."""
        f = lambda u: math.exp((power + 1) * u) * float(self(math.exp(u)))
        if hi == np.inf:
            top = math.log(self.r_max)
            val = 0.0
            if lo < self.r_max:
                val = _quad_log_segments(f, math.log(lo), top)
            # power-law tail beyond r_max
            p = self.tail_exponent
            start = max(lo, self.r_max)
            if p - power - 1 <= 0:
                raise QuadratureError("divergent kernel moment", {"power": power})
            val += float(self(start)) * start ** (power + 1) / (p - power - 1)
            return val
        if lo == 0.0:
            p = self.origin_exponent
            r0 = min(self.r_min, hi)
            if power + 1 - p <= 0:
                raise QuadratureError("divergent kernel moment at the origin", {"power": power})
            head = float(self(r0)) * r0 ** (power + 1) / (power + 1 - p)
            return head + (_quad_log_segments(f, math.log(r0), math.log(hi)) if hi > r0 else 0.0)
        return _quad_log_segments(f, math.log(lo), math.log(hi))

    @cached_property
    def _tail_table(self):
        # T(R) = int_R^inf r^{d-1} j(r) dr on the sample grid, by Gauss-Legendre per cell
        rs, _ = self.grid
        lr = np.log(rs)
        x, w = np.polynomial.legendre.leggauss(12)
        a, b = lr[:-1], lr[1:]
        mid, half = (a + b) / 2, (b - a) / 2
        u = mid[:, None] + half[:, None] * x[None, :]
        vals = np.exp(self.d * u) * self(np.exp(u))
        cell = (vals * w[None, :]).sum(axis=1) * half
        p = self.tail_exponent
        far = float(self(self.r_max)) * self.r_max ** self.d / (p - self.d)
        tail = np.concatenate([np.cumsum(cell[::-1])[::-1], [0.0]]) + far
        return CubicSpline(lr, np.log(tail)), p

    def tail_mass(self, R):
        """``T(R) = int_R^inf r^{d-1} j(r) dr``; multiply by the sphere area for the mass."""
        R = np.asarray(R, dtype=float)
        spl, p = self._tail_table
        lr = np.log(R)
        lo, hi = math.log(self.r_min), math.log(self.r_max)
        out = np.exp(spl(np.clip(lr, lo, hi)))
        top = float(np.exp(spl(hi)))
        out = np.where(lr > hi, top * np.exp((self.d - p) * np.maximum(lr - hi, 0.0)), out)
        if np.any(lr < lo):
            s = -self.origin_exponent + self.d  # integrand exponent r^{s-1}
            head = float(self(self.r_min)) * self.r_min ** self.d
            extra = head * (1 - np.exp(s * np.minimum(lr - lo, 0.0))) / s
            out = np.where(lr < lo, np.exp(spl(lo)) + extra, out)
        return out[()] if out.ndim == 0 else out

    @cached_property
    def rho(self):
        """Tail-ratio constant ``min_{1<=r<=10} j(r+1)/j(r)``."""
        return tail_ratio_constant(self, 10.0)


def _quad_log_segments(f, a, b, nodes=16):
    if b <= a:
        return 0.0
    n_seg = max(1, int(np.ceil((b - a) / 0.5)))
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, n_seg + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        total += half * sum(wi * f(mid + half * xi) for xi, wi in zip(x, w))
    return total


def _kernel_value(psi, d, r, rtol=1e-8):
    """``j(r) = int_0^inf (4 pi t)^{-d/2} e^{-r^2/4t} m(t) dt`` by adaptive quadrature."""
    if r <= 0:
        raise ValueError("kernel radius must be positive")
    if psi.exact_density:
        if psi.kind == "stable":
            return _stable_kernel(psi.alpha / 2, d, r)
        if psi.kind == "sum_stable":
            return _stable_kernel(psi.alpha / 2, d, r) + _stable_kernel(psi.beta / 2, d, r)
        m = subordinator_levy_density(psi)

        # t = r^2 s, then s = e^u: the integrand is a smooth bump in u
        def log_g(u):
            s = math.exp(u)
            t = r * r * s
            return (-d / 2 * math.log(4 * math.pi * t) - 1 / (4 * s)
                    + m.log_density(t) + math.log(t))
        return _bump_integral(log_g, rtol, r)
    return _stieltjes_kernel(psi, d, r, rtol)


def _stable_kernel(a, d, r):
    # closed form of the heat-kernel subordination integral for m(t) = a/Gamma(1-a) t^{-1-a}
    if a >= 1:
        raise DensityUnavailable("Brownian component has no jump kernel")
    return (a / math.gamma(1 - a) * (4 * math.pi) ** (-d / 2) * math.gamma(d / 2 + a)
            * (r * r / 4) ** (-d / 2 - a))


def _bump_integral(log_g, rtol, r):
    """Integrate ``exp(log_g(u))`` over the real line, splitting at the mode."""
    res = optimize.minimize_scalar(lambda u: -log_g(u), bracket=(-6.0, 0.0), tol=1e-10)
    u0 = float(res.x)
    peak = log_g(u0)
    g = lambda u: math.exp(log_g(u) - peak)
    total, err = 0.0, 0.0
    info = []
    # left of the mode the heat factor decays super-exponentially; on the right
    # the integrand decays at least like exp(-u/2)
    for lo, hi in [(u0 - 30, u0 - 8), (u0 - 8, u0), (u0, u0 + 8), (u0 + 8, u0 + 40),
                   (u0 + 40, u0 + 90)]:
        v, e = integrate.quad(g, lo, hi, epsabs=1e-14, epsrel=rtol * 1e-2, limit=200)
        total += v
        err += e
        info.append((lo, hi, v, e))
    if not np.isfinite(total) or err > rtol * total:
        raise QuadratureError(f"kernel quadrature did not converge at r={r}",
                              {"pieces": info, "mode": u0})
    return total * math.exp(peak)


def _stieltjes_kernel(psi, d, r, rtol):
    # Fubini on j = int heat * m with m from Stieltjes inversion:
    # j(r) = (1/pi) (4 pi)^{-d/2} int_0^inf Im Psi(-s+i0) K_d(r, s) ds,
    # K_d(r, s) = int_0^inf t^{-d/2} e^{-r^2/4t - s t} dt = 2 (r/(2 sqrt s))^{1-d/2} K_{d/2-1}(r sqrt s)
    nu = d / 2 - 1

    def kern(s):
        q = r * np.sqrt(s)
        return 2 * (r / (2 * np.sqrt(s))) ** (-nu) * special.kve(nu, q) * np.exp(-q)

    # the Bessel factor has decayed by e^-60 once r sqrt(s) = 60
    top = max(4.0, (60.0 / r) ** 2)
    bottom = min(1e-26, 1e-26 / (r * r))
    total = _cut_integral(psi, kern, top, bottom)
    if not np.isfinite(total) or total <= 0:
        raise QuadratureError(f"Stieltjes kernel quadrature failed at r={r}",
                              {"value": total})
    return total / math.pi * (4 * math.pi) ** (-d / 2)


def jump_kernel(psi, d, **kwargs):
    """Jump kernel of the subordinate Brownian motion in ``R^d``."""
    if d < 1 or int(d) != d:
        raise ValueError("dimension must be a positive integer")
    subordinator_levy_density(psi)
    if psi.kind == "relativistic" and "r_max" not in kwargs:
        # j decays like exp(-sqrt(lam) r); stop before it underflows
        kwargs["r_max"] = min(1e5, 600.0 / math.sqrt(psi.lam))
    return JumpKernel(psi, int(d), **kwargs)


# ---------------------------------------------------------------------------
# symbol identity and tail ratio
# ---------------------------------------------------------------------------
def symbol_integral(kernel, k, n_osc=2000, nodes=16):
    """``int_{R^d} (1 - cos(y.z)) j(|y|) dy`` for ``|z| = k`` in radial coordinates.

    Below ``r0 = 1e-6/k`` the integrand is replaced by its quadratic expansion
    against a power-law continuation of j; the oscillatory range is integrated
    panel by panel between zeros of the oscillating factor, and the remainder
    beyond the last zero is the non-oscillating tail mass (the oscillating part
    is cut at a zero of its antiderivative, leaving a negligible remainder).
    """
    d = kernel.d
    if d not in (1, 2):
        raise ValueError("symbol check implemented for d in {1, 2}")
    if k == 0:
        return 0.0
    x, w = np.polynomial.legendre.leggauss(nodes)
    area = _sphere_area(d)
    if d == 1:
        osc = lambda r: 1 - np.cos(k * r)
        zeros = np.arange(1, n_osc + 1) * math.pi / k  # zeros of sin(kr)
        end = zeros[-1]
    else:
        osc = lambda r: 1 - special.j0(k * r)
        zeros = special.jn_zeros(0, n_osc) / k
        end = special.jn_zeros(1, n_osc)[-1] / k  # zero of J1: cuts the oscillating tail
        zeros = np.append(zeros[zeros < end], end)
    r0 = 1e-6 / k
    # near origin: 1 - cos ~ (k r cos)^2/2, averaged over directions: k^2 r^2 / (2d)
    p = -math.log(kernel(r0 * 1.01) / kernel(r0)) / math.log(1.01)
    head = area * k * k / (2 * d) * float(kernel(r0)) * r0 ** (d + 2) / (d + 2 - p)
    # log-spaced panels from r0 to the first zero
    edges = np.geomspace(r0, zeros[0], int(np.ceil(np.log10(zeros[0] / r0) * 4)) + 1)
    edges = np.concatenate([edges, zeros[1:]])
    a, b = edges[:-1], edges[1:]
    mid, half = (a + b) / 2, (b - a) / 2
    r = mid[:, None] + half[:, None] * x[None, :]
    vals = osc(r) * r ** (d - 1) * kernel(r)
    body = area * float(((vals * w).sum(axis=1) * half).sum())
    tail = area * float(kernel.tail_mass(end))
    return head + body + tail


def verify_symbol(psi, d, z, kernel=None):
    """Relative residual of the symbol identity at frequency ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size != d:
        raise ValueError("frequency vector must have d components")
    k = float(np.linalg.norm(z))
    if k == 0:
        return 0.0
    kern = jump_kernel(psi, d) if kernel is None else kernel
    target = float(psi(k * k))
    return abs(symbol_integral(kern, k) - target) / target


def tail_ratio_constant(kernel, rmax, n=2000):
    """``min_{1 <= r <= rmax} j(r+1)/j(r)`` on a dense grid."""
    if rmax < 2:
        raise ValueError("rmax must be at least 2")
    r = np.linspace(1.0, rmax, n)
    return float(np.min(kernel(r + 1) / kernel(r)))
