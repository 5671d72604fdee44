import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from psidel import Ball, Box, Ellipse, LogDamped, Relativistic, Stable
from psidel.solver import (AsymmetricTorsion, DirichletSolver, EigenFailure, HypothesisViolated,
                           NotSupersolution, PicardDivergence, Resonant, abp_check, antimax_check,
                           discretize, hopf_ratio, inverse_sign_check, make_grid,
                           overdetermined_check, principal_eigenpair, script_H, solve_dirichlet,
                           solve_semilinear, spectral_gap_check, trace_profile, boundary_samples)


# -- grid ----------------------------------------------------------------------
def test_grid_basics(disk_op):
    g = disk_op.grid
    assert g.n == 305 and g.d == 2
    assert np.allclose(g.points[g.center_node], 0)
    assert np.all(g.domain.contains(g.points))
    for perm in (g.mirror(0), g.mirror(1), g.swap_axes()):
        assert np.all(perm >= 0) and np.array_equal(perm[perm], np.arange(g.n))


def test_interpolation_is_exact_for_linear_data(disk_op):
    g = disk_op.grid
    u = 1 + 2 * g.points[:, 0] - g.points[:, 1]
    x = np.array([[0.13, -0.27], [0.0, 0.5], [-0.31, 0.02]])
    assert np.allclose(g.interpolate(u, x), 1 + 2 * x[:, 0] - x[:, 1])


def test_grid_errors():
    with pytest.raises(ValueError):
        make_grid(Ball((0.0, 0.0), 1.0), 0.0)
    with pytest.raises(ValueError):
        make_grid(Ball((0.0, 0.0, 0.0), 1.0), 0.5)
    # the center is always a node, so even a huge spacing leaves one
    assert make_grid(Box((0.0, 0.0), (1.0, 1.0)), 5.0).n == 1


def test_lp_norm(disk_op):
    g = disk_op.grid
    assert g.lp_norm(np.ones(g.n), 1) == pytest.approx(g.n * g.h ** 2)
    assert g.lp_norm(-np.arange(g.n), np.inf) == g.n - 1


# -- assembly ------------------------------------------------------------------
def test_matrix_structure(disk_op):
    A = disk_op.A
    off = A - np.diag(np.diag(A))
    assert np.array_equal(A, A.T)
    assert off.min() >= 0
    assert A.sum(axis=1).max() < 0


def test_constant_vector_feels_only_the_exterior(disk_op):
    # A 1 = -(exterior mass beyond the split) - (Laplacian legs leaving the grid)
    lost = disk_op.kill + disk_op.near_exterior()
    assert np.allclose(disk_op.A.sum(axis=1), -lost, rtol=0, atol=1e-12 * np.abs(disk_op.A).max())


def test_exterior_mass_in_one_dimension(interval_op):
    # Stable(1), d = 1: j(r) = 1/(pi r^2), so the mass past distance R is 1/(pi R) per side
    x = interval_op.grid.points[:, 0]
    s = interval_op.split
    ref = 1 / (math.pi * np.maximum(s, 1 - x)) + 1 / (math.pi * np.maximum(s, 1 + x))
    assert np.allclose(interval_op.kill, ref, rtol=1e-12)


def test_exterior_mass_on_the_disk(disk_op):
    # d = 2: r j(r) integrates to T(R) = 1/(2 pi R); integrate over directions by quadrature
    g = disk_op.grid
    s = disk_op.split

    def oracle(p):
        def f(th):
            rho = g.domain.ray_exit(p[None], np.array([[math.cos(th), math.sin(th)]]))[0]
            return 1 / (2 * math.pi * max(s, rho))
        return integrate.quad(f, 0, 2 * math.pi, limit=400, epsabs=1e-13)[0]

    for i in (0, g.center_node, 50, 150, g.n - 1):
        assert disk_op.kill[i] == pytest.approx(oracle(g.points[i]), rel=1e-7)


@pytest.mark.parametrize("psi", [Stable(1), Relativistic(1, 1), LogDamped(1, 0.5)])
def test_generator_on_a_gaussian_bump(psi):
    # oracle: -Psi(-Delta) u by Fourier quadrature; u = exp(-x^2/s^2) is ~e^-25 at the boundary
    sig = 0.2

    def ref(x0):
        f = lambda xi: (float(psi(xi * xi)) * sig * math.sqrt(math.pi)
                        * math.exp(-(sig * xi) ** 2 / 4) * math.cos(xi * x0))
        return -integrate.quad(f, 0, 80 / sig, limit=800)[0] / math.pi

    errs = []
    for h in (0.025, 0.0125):
        op = discretize(psi, make_grid(Ball((0.0,), 1.0), h))
        x = op.grid.points[:, 0]
        Au = op.A @ np.exp(-x ** 2 / sig ** 2)
        idx = [int(np.argmin(abs(x - x0))) for x0 in (0.0, 0.1, 0.3)]
        errs.append(max(abs(Au[i] - ref(x[i])) / abs(ref(x[i])) for i in idx))
    assert errs[1] < 0.03
    assert errs[1] < 0.6 * errs[0]  # first order in h


# -- linear solves -------------------------------------------------------------
def test_interval_torsion_closed_form(interval_op):
    # Stable(1) on (-1, 1): u(x) = sqrt(1 - x^2)
    x = interval_op.grid.points[:, 0]
    u = solve_dirichlet(interval_op, 0.0, -1.0)
    inner = np.abs(x) <= 0.5
    assert np.allclose(u[inner], np.sqrt(1 - x[inner] ** 2), rtol=0.03)


def test_disk_torsion_center_value(disk_op):
    u = solve_dirichlet(disk_op, 0.0, -1.0)
    assert u[disk_op.grid.center_node] == pytest.approx(2 / math.pi, rel=0.03)


def test_zero_source_skips_the_factorization(disk_op):
    assert not solve_dirichlet(disk_op, 0.0, 0.0).any()


@given(arrays(np.float64, 305, elements=st.floats(0, 1)))
@settings(max_examples=15, deadline=None)
def test_discrete_maximum_principle(disk_op, f):
    # A is an M-matrix up to sign: -A u = f >= 0 forces u >= 0
    u = solve_dirichlet(disk_op, 0.0, -f)
    assert u.min() >= -1e-12 * max(1.0, np.abs(u).max())


def test_interval_eigenvalue_against_literature(interval_op):
    # first Dirichlet eigenvalue of the half Laplacian on (-1, 1)
    eig = principal_eigenpair(interval_op)
    assert -eig.lam == pytest.approx(1.1577738836977, rel=0.03)
    assert np.all(eig.phi > 0) and eig.phi[interval_op.grid.center_node] == 1
    assert eig.residual < 1e-8


def test_eigen_failure_and_resonance(disk_op):
    with pytest.raises(EigenFailure) as exc:
        principal_eigenpair(disk_op, tol=1e-30, max_iter=1)
    assert "ritz" in exc.value.diagnostics
    lam = principal_eigenpair(disk_op).lam
    with pytest.raises(Resonant, match="resonant"):
        DirichletSolver(disk_op, shift=lam)
    # above the spectrum the LU branch is used and still solves
    solver = DirichletSolver(disk_op, shift=lam + 0.5)
    f = np.ones(disk_op.n)
    assert np.allclose((disk_op.with_c(None) - (lam + 0.5) * np.eye(disk_op.n)) @ solver.solve(f), f)


def test_constant_potential_shifts_the_eigenvalue(disk_op):
    a = principal_eigenpair(disk_op).lam
    b = principal_eigenpair(disk_op, c=0.3).lam
    assert b == pytest.approx(a + 0.3, abs=1e-9)


# -- principles ----------------------------------------------------------------
def test_hopf_ratio_rejects_negative_samples(disk_op, stable1):
    u = solve_dirichlet(disk_op, 0.0, -1.0)
    assert hopf_ratio(u, disk_op.grid, stable1) > 0
    with pytest.raises(NotSupersolution):
        hopf_ratio(u - u.mean(), disk_op.grid, stable1)


def test_abp_threshold_and_degenerate_cases(disk_op, stable1):
    g = disk_op.grid
    with pytest.raises(ValueError, match="below ABP threshold"):
        abp_check(np.ones(g.n), np.ones(g.n), 1.5, stable1, g)
    assert abp_check(-np.ones(g.n), np.ones(g.n), 4, stable1, g) == 0.0
    assert abp_check(np.ones(g.n), -np.ones(g.n), 4, stable1, g) == np.inf


def test_antimax(disk_op):
    f = -np.ones(disk_op.n)
    rep = antimax_check(disk_op, None, f)
    assert rep.delta_star and rep.delta_star > 0
    assert all(m < 0 for lam, m in rep.tested if lam > rep.lam_D - rep.delta_star)
    assert antimax_check(disk_op, None, np.zeros(disk_op.n)).vacuous
    with pytest.raises(ValueError):
        antimax_check(disk_op, None, np.ones(disk_op.n))


def test_gap_and_inverse_sign(disk_op):
    rep = spectral_gap_check(disk_op)
    assert rep.gap > 0 and rep.one_dimensional and not rep.nontrivial_found
    assert inverse_sign_check(disk_op) <= 0


def test_semilinear_superposition_and_symmetry(disk_op):
    g = disk_op.grid
    rhs = np.exp(-np.sum(g.points ** 2, axis=1))
    res = solve_semilinear(disk_op, lambda u: np.zeros_like(u), rhs)
    assert np.allclose(res.u, solve_dirichlet(disk_op, 0.0, -rhs), atol=1e-8)
    lam = principal_eigenpair(disk_op).lam
    k = abs(lam) / 4
    res = solve_semilinear(disk_op, lambda u: k * u, rhs, lipschitz=k, lam=lam)
    u = res.u
    # linear f: same as a shifted Dirichlet solve
    assert np.allclose(u, DirichletSolver(disk_op, shift=k).solve(-rhs), atol=1e-8)
    for perm in (g.mirror(0), g.mirror(1), g.swap_axes()):
        assert np.abs(u - u[perm]).max() < 1e-10 * np.abs(u).max()


def test_picard_divergence(disk_op):
    lam = principal_eigenpair(disk_op).lam
    with pytest.raises(PicardDivergence, match="Picard divergence"):
        solve_semilinear(disk_op, lambda u: u, np.ones(disk_op.n), lipschitz=2 * abs(lam), lam=lam)
    # without the up-front check the iteration itself blows up
    with pytest.raises(PicardDivergence):
        solve_semilinear(disk_op, lambda u: 3 * abs(lam) * u, np.ones(disk_op.n), max_iter=500)


# -- traces --------------------------------------------------------------------
def test_trace_profile_is_linear(disk_op, stable1):
    u = solve_dirichlet(disk_op, 0.0, -1.0)
    _, pts = boundary_samples(disk_op.grid.domain, 8, start=0.1)
    a = trace_profile(u, disk_op.grid, stable1, pts)
    b = trace_profile(2.5 * u, disk_op.grid, stable1, pts)
    assert np.allclose(b.values, 2.5 * a.values) and np.array_equal(a.reliable, b.reliable)


def test_ball_trace_scales_like_the_renewal_function(stable1):
    # Stable(1) is scale invariant: H(r) = H(1) sqrt(r) at a fixed number of nodes per radius
    h1 = script_H(1.0, stable1, resolution=10)
    assert script_H(4.0, stable1, resolution=10) == pytest.approx(2 * h1, rel=1e-9)


def test_asymmetric_torsion_is_reported(stable1):
    with pytest.raises(AsymmetricTorsion, match="discretization bug"):
        script_H(1.0, stable1, resolution=10, rtol=1e-12)


def test_overdetermined_argument_checks(stable1):
    ell = Ellipse(1.5, 1.0)
    with pytest.raises(ValueError):
        overdetermined_check(ell, stable1, lambda r: 0.0, 0.1)
    # q = 1/r decreases while H increases
    with pytest.raises(HypothesisViolated, match="hypothesis violated"):
        overdetermined_check(ell, stable1, lambda r: 1 / r, 0.1, H=lambda r: math.sqrt(r))
