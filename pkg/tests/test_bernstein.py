import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from psidel.bernstein import (DensityUnavailable, LogBoosted, LogDamped, Relativistic,
                              ScalingCertificate, Stable, SumStable, catalog_certificates,
                              tail_ratio_constant, check_scaling, eval_psi, from_descriptor, jump_kernel,
                              laplace_identity_residual, subordinator_levy_density,
                              verify_symbol)

CATALOG = [Stable(1), Relativistic(1, 1), SumStable(1, 1.5), LogDamped(1, 0.5), LogBoosted(1, 0.5)]


def _member():
    a = st.floats(0.2, 1.9)
    return st.one_of(
        a.map(Stable),
        st.tuples(a, st.floats(0.1, 5)).map(lambda p: Relativistic(*p)),
        st.tuples(a, st.floats(0.2, 2.0)).map(lambda p: SumStable(*p)),
        a.flatmap(lambda x: st.floats(0.0, 0.95 * x).map(lambda b: LogDamped(x, b))),
        a.flatmap(lambda x: st.floats(0.05, 0.95 * (2 - x)).map(lambda b: LogBoosted(x, b))),
    )


# -- construction ----------------------------------------------------------
@pytest.mark.parametrize("bad", [
    lambda: Stable(0), lambda: Stable(2.5), lambda: Relativistic(2, 1), lambda: Relativistic(1, 0),
    lambda: LogDamped(1, 1), lambda: LogBoosted(1.5, 0.6), lambda: SumStable(1, 3),
])
def test_parameter_ranges_are_enforced(bad):
    with pytest.raises(ValueError):
        bad()


def test_descriptor_round_trip():
    for psi in CATALOG:
        assert from_descriptor(psi.descriptor()) == psi


def test_unknown_kind_and_extra_keys_rejected():
    with pytest.raises(ValueError, match="unknown"):
        from_descriptor({"kind": "poisson", "alpha": 1})
    with pytest.raises(ValueError):
        from_descriptor({"kind": "stable", "alpha": 1, "m": 2})


# -- values ------------------------------------------------------------------
def test_closed_forms():
    x = np.array([0.0, 0.3, 2.0, 40.0])
    assert np.allclose(Stable(1)(x), np.sqrt(x))
    assert np.allclose(Relativistic(1, 1)(x), np.sqrt(x + 1) - 1)
    assert np.allclose(SumStable(1, 1.5)(x), x ** 0.5 + x ** 0.75)
    assert np.allclose(LogBoosted(1, 0.5)(x), np.sqrt(x) * np.log1p(x) ** 0.25)
    assert eval_psi(Stable(1), 4.0) == 2.0


def test_relativistic_small_x_has_no_cancellation():
    # Psi(x) ~ (alpha/2) lam^(alpha/2 - 1) x as x -> 0
    psi = Relativistic(1, 2)
    x = 1e-14
    assert float(psi(x)) == pytest.approx(0.5 * psi.lam ** -0.5 * x, rel=1e-6)


@given(_member(), st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
@settings(max_examples=200, deadline=None)
def test_increasing_and_subadditive(psi, x, y):
    lo, hi = min(x, y), max(x, y)
    assert psi(lo) <= psi(hi) * (1 + 1e-12)
    # Bernstein functions are subadditive
    assert psi(x + y) <= (psi(x) + psi(y)) * (1 + 1e-12)
    assert psi(0.0) == 0 and 0 < psi(1e-300) < psi(1e-100)


@given(_member(), st.floats(1e-4, 1e4))
@settings(max_examples=100, deadline=None)
def test_derivative_signs_alternate(psi, x):
    # finite differences of Psi in log-spaced steps: Psi' > 0, Psi'' < 0, Psi''' > 0
    h = 1e-2 * x
    f = [float(psi(x + k * h)) for k in range(4)]
    d1, d2, d3 = f[1] - f[0], f[2] - 2 * f[1] + f[0], f[3] - 3 * f[2] + 3 * f[1] - f[0]
    scale = abs(f[0]) + 1e-300
    assert d1 > 0
    assert d2 < 1e-13 * scale
    assert d3 > -1e-12 * scale


@given(st.floats(0.1, 2.0), st.floats(1e-3, 1e3), st.floats(1e-2, 1e2))
def test_stable_is_homogeneous(alpha, x, g):
    psi = Stable(alpha)
    assert psi(g * x) == pytest.approx(g ** (alpha / 2) * psi(x), rel=1e-12)


@pytest.mark.parametrize("psi", CATALOG)
def test_complex_continuation_matches_real_axis(psi):
    x = np.geomspace(1e-6, 1e6, 31)
    assert np.allclose(psi.complex(x + 0j).real, psi(x), rtol=1e-10)
    z = np.array([1 + 2j, -3 + 0.5j, 0.01 - 4j])
    assert np.allclose(psi.complex(np.conj(z)), np.conj(psi.complex(z)))


# -- scaling certificates ----------------------------------------------------
@pytest.mark.parametrize("psi", CATALOG)
def test_catalog_certificates_hold(psi):
    certs = catalog_certificates(psi)
    for cert in certs:
        assert check_scaling(psi, cert).holds
    assert min(c.exponent for c in certs if c.side == "lower") <= max(
        c.exponent for c in certs if c.side == "upper")


def test_planted_certificate_fails_with_witness():
    rep = check_scaling(Stable(1), ScalingCertificate("lower", 0.6))
    assert not rep.holds
    x, g = rep.witness
    assert Stable(1)(g * x) < g ** 0.6 * Stable(1)(x)


def test_certificate_validation():
    with pytest.raises(ValueError):
        ScalingCertificate("lower", 0.5, constant=2.0)
    with pytest.raises(ValueError):
        ScalingCertificate("upper", 0.5, constant=0.5)
    with pytest.raises(ValueError):
        ScalingCertificate("sideways", 0.5)


# -- Levy density ------------------------------------------------------------
def test_stable_density_closed_form():
    m = subordinator_levy_density(Stable(1))
    t = np.array([0.01, 1.0, 50.0])
    assert np.allclose(m(t), 0.5 / math.sqrt(math.pi) * t ** -1.5)


@pytest.mark.parametrize("psi", CATALOG)
@pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
def test_laplace_identity(psi, x):
    # oracle: Psi itself; int (1 - e^{-xt}) m(t) dt must reproduce it
    assert laplace_identity_residual(psi, x) < 1e-6


def test_log_family_density_against_direct_stieltjes_quadrature():
    # independent oracle: adaptive quadrature of (1/pi) int e^{-ts} Im Psi(-s+i0) ds
    psi = LogDamped(1, 0.5)
    t = 0.7

    def f(s):
        return math.exp(-t * s) * float(psi.im_on_cut(np.array([s]))[0])
    pieces = [(0, 0.5), (0.5, 1), (1, 2), (2, 200)]
    ref = sum(integrate.quad(f, a, b, limit=400, epsabs=0, epsrel=1e-10)[0] for a, b in pieces) / math.pi
    assert float(subordinator_levy_density(psi)(t)) == pytest.approx(ref, rel=1e-7)


def test_density_unavailable_with_brownian_part():
    with pytest.raises(DensityUnavailable):
        subordinator_levy_density(Stable(2))


# -- jump kernel -------------------------------------------------------------
@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_stable_kernel_matches_fractional_laplacian_constant(d, alpha):
    # j(r) = alpha 2^(alpha-1) Gamma((d+alpha)/2) / (pi^(d/2) Gamma(1-alpha/2)) r^(-d-alpha)
    c = alpha * 2 ** (alpha - 1) * special.gamma((d + alpha) / 2) / (
        math.pi ** (d / 2) * special.gamma(1 - alpha / 2))
    kern = jump_kernel(Stable(alpha), d)
    r = np.array([1e-3, 0.1, 1.0, 7.0])
    assert np.allclose(kern(r), c * r ** (-d - alpha), rtol=1e-7)


@pytest.mark.parametrize("psi", CATALOG)
def test_kernel_positive_decreasing_and_tail_mass(psi):
    kern = jump_kernel(psi, 2)
    r = np.geomspace(1e-4, 50, 200)
    j = kern(r)
    assert np.all(j > 0) and np.all(np.diff(j) < 0)
    # T(R) = int_R^inf r j(r) dr against adaptive quadrature in log r
    R = 0.3
    ref, _ = integrate.quad(lambda u: math.exp(2 * u) * float(kern(math.exp(u))),
                            math.log(R), math.log(kern.r_max), limit=400)
    tail = float(kern(kern.r_max)) * kern.r_max ** 2 / (kern.tail_exponent - 2)
    assert float(kern.tail_mass(R)) == pytest.approx(ref + tail, rel=1e-6)


@pytest.mark.parametrize("psi", CATALOG)
def test_tail_ratio_constant(psi):
    rho = tail_ratio_constant(jump_kernel(psi, 2), 10.0)
    assert 0 < rho <= 1


@pytest.mark.parametrize("psi", [Stable(1), Relativistic(1, 1), LogBoosted(1, 0.5)])
def test_symbol_identity_spot_check(psi):
    assert verify_symbol(psi, 2, [1.0, 1.0]) < 1e-3
