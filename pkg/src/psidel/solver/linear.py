"""Dirichlet solves, the principal eigenpair and the semilinear fixed point."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

__all__ = [
    "Resonant",
    "EigenFailure",
    "PicardDivergence",
    "DirichletSolver",
    "solve_dirichlet",
    "EigenPair",
    "principal_eigenpair",
    "SemilinearResult",
    "solve_semilinear",
]

COND_LIMIT = 1e12


class Resonant(np.linalg.LinAlgError):
    pass


class EigenFailure(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class PicardDivergence(RuntimeError):
    pass


class DirichletSolver:
    """Factorization of ``A + diag(c) - shift`` for repeated solves.

    Negative definite systems (the usual case: ``c`` below the principal
    eigenvalue) use a Cholesky factorization, anything else LU.  The LAPACK
    condition estimate is checked once, at factorization time.
    """

    def __init__(self, op, c=None, shift=0.0):
        M = op.with_c(c)
        if shift:
            M[np.diag_indices_from(M)] -= shift
        anorm = np.abs(M).sum(axis=0).max()
        try:
            self._cho = linalg.cho_factor(-M, check_finite=False)
            self._lu = None
            rcond, info = linalg.lapack.dpocon(self._cho[0], anorm, uplo="L" if self._cho[1] else "U")
        except linalg.LinAlgError:
            self._cho = None
            self._lu = linalg.lu_factor(M, check_finite=False)
            rcond, info = linalg.lapack.dgecon(self._lu[0], anorm, norm="1")
        self.cond = np.inf if rcond == 0 else 1.0 / rcond
        if not self.cond < COND_LIMIT:
            raise Resonant(f"resonant: lambda near spectrum (condition estimate {self.cond:.2e})")

    def solve(self, f):
        f = np.asarray(f, dtype=float)
        if self._cho is not None:
            return -linalg.cho_solve(self._cho, f, check_finite=False)
        return linalg.lu_solve(self._lu, f, check_finite=False)


def solve_dirichlet(op, c, f):
    """Solve ``(A + diag(c)) u = f`` on the interior nodes (``u = 0`` outside)."""
    f = np.broadcast_to(np.asarray(f, dtype=float), (op.n,))
    if not np.any(f):
        return np.zeros(op.n)
    return DirichletSolver(op, c).solve(f)


@dataclass(frozen=True)
class EigenPair:
    lam: float
    phi: np.ndarray
    residual: float
    iterations: int


def principal_eigenpair(op, c=None, tol=1e-10, max_iter=500):
    """Largest eigenvalue of ``A + diag(c)`` and its positive eigenvector.

    Inverse power iteration with shift ``sigma`` above the spectrum: at start
    ``sigma = max c``, which bounds every eigenvalue because the rows of ``A``
    have negative sums.  Once the Rayleigh quotient ``mu`` has a residual ``r``,
    some eigenvalue lies within ``|r|`` of ``mu``, and the shift moves to
    ``mu + 2|r|`` (refactorizing), which keeps the shifted matrix definite.
    The eigenvector is normalized to 1 at the node nearest the domain center.
    """
    M = op.with_c(c)
    n = op.n
    cvec = np.zeros(n) if c is None else np.broadcast_to(np.asarray(c, float), (n,))
    sigma = float(cvec.max())
    v = np.ones(n) / np.sqrt(n)
    cho = linalg.cho_factor(sigma * np.eye(n) - M, check_finite=False)
    history = []
    res = np.inf
    mu = sigma
    for it in range(1, max_iter + 1):
        v = linalg.cho_solve(cho, v, check_finite=False)
        v /= np.linalg.norm(v)
        Mv = M @ v
        mu = float(v @ Mv)
        r = Mv - mu * v
        res2 = float(np.linalg.norm(r))
        res = float(np.abs(r).max() / np.abs(v).max())
        history.append((mu, res))
        if res <= tol:
            break
        new_sigma = mu + 2 * res2
        if res2 < 1e-2 * abs(sigma - mu) and new_sigma < sigma:
            try:
                cho = linalg.cho_factor(new_sigma * np.eye(n) - M, check_finite=False)
                sigma = new_sigma
            except linalg.LinAlgError:
                pass
    else:
        raise EigenFailure("eigen iteration stagnated",
                           {"ritz": history[-5:], "shift": sigma, "iterations": max_iter})
    k = op.grid.center_node
    phi = v / v[k]
    if not np.all(phi > 0):
        raise EigenFailure("principal eigenvector changes sign", {"min": float(phi.min())})
    res = float(np.abs(M @ phi - mu * phi).max() / np.abs(phi).max())
    return EigenPair(mu, phi, res, it)


@dataclass(frozen=True)
class SemilinearResult:
    u: np.ndarray
    increments: list
    iterations: int


def solve_semilinear(op, f_nl, g, lipschitz=None, lam=None, tol=1e-9, max_iter=10_000):
    """Fixed point of ``u <- solve(A, f_nl(u) - g)`` with damping 1/2.

    ``A u = f_nl(u) - g`` is the lattice form of ``-Psi(-Delta) u = f(u) - g``.
    When both the Lipschitz constant of ``f_nl`` and the principal eigenvalue
    are given, ``L < |lambda_D|`` is checked up front.
    """
    if lipschitz is not None and lam is not None and not lipschitz < abs(lam):
        raise PicardDivergence("Picard divergence (Lipschitz margin violated)")
    g = np.broadcast_to(np.asarray(g, dtype=float), (op.n,))
    solver = DirichletSolver(op)
    u = np.zeros(op.n)
    incs = []
    for it in range(1, max_iter + 1):
        new = 0.5 * u + 0.5 * solver.solve(f_nl(u) - g)
        inc = float(np.abs(new - u).max())
        incs.append(inc)
        u = new
        if not np.isfinite(inc) or inc > 1e12:
            break
        if inc <= tol:
            return SemilinearResult(u, incs, it)
    raise PicardDivergence("Picard divergence (Lipschitz margin violated)")
