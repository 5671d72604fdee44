import math

import numpy as np
import pytest
from scipy import integrate, special

from psidel import Ball, LogBoosted, LogDamped, Relativistic, Stable, SumStable
from psidel.mc import (CHUNK, HorizonTooShort, InsufficientSurvivors, NoExactSampler, PathConfig,
                       estimate_torsion, feynman_kac, laplace_calibration, sample_exit,
                       sample_subordinator_increment, simulate_paths, subordinator_sample,
                       survival_decay_rate)

DISK = Ball((0.0, 0.0), 1.0)
FAST = PathConfig(h=1e-2, t_max=3.0, seed=11)


@pytest.mark.parametrize("psi", [LogDamped(1, 0.5), LogBoosted(1, 0.5)])
def test_log_families_have_no_exact_sampler(psi):
    with pytest.raises(NoExactSampler):
        subordinator_sample(psi, 1.0, 10)
    with pytest.raises(NoExactSampler):
        simulate_paths(DISK, (0, 0), psi, FAST, 10)


def test_kanter_sampler_matches_the_levy_distribution():
    # S_1 for Psi(x) = sqrt(x) has density s^{-3/2} e^{-1/(4s)} / (2 sqrt(pi))
    dens = lambda s: s ** -1.5 * math.exp(-1 / (4 * s)) / (2 * math.sqrt(math.pi))
    p_ref, _ = integrate.quad(dens, 0, 1)
    assert p_ref == pytest.approx(special.erfc(0.5), rel=1e-9)
    s = subordinator_sample(Stable(1), 1.0, 200_000, seed=2)
    p = np.mean(s <= 1)
    assert abs(p - p_ref) < 4 * math.sqrt(p_ref * (1 - p_ref) / s.size)


def test_stable_two_is_pure_drift():
    assert np.all(subordinator_sample(Stable(2), 0.3, 100) == 0.3)


def test_relativistic_moments():
    # Psi(x) = sqrt(x + 1) - 1: E S_1 = Psi'(0) = 1/2, Var S_1 = -Psi''(0) = 1/4
    s = subordinator_sample(Relativistic(1, 1), 1.0, 200_000, seed=5)
    assert s.mean() == pytest.approx(0.5, abs=4 * 0.5 / math.sqrt(s.size))
    assert s.var() == pytest.approx(0.25, rel=0.03)


@pytest.mark.parametrize("psi", [Stable(0.8), Relativistic(1, 1), SumStable(1, 1.5)])
def test_laplace_calibration_agrees(psi):
    est = laplace_calibration(psi, 0.5, n=50_000, seed=1)
    assert est.info["agrees"]


def test_generator_based_sampler():
    x = sample_subordinator_increment(Stable(1), 1.0, rng=0, size=(1000,))
    assert x.shape == (1000,) and np.all(x > 0)
    assert isinstance(sample_subordinator_increment(Relativistic(1, 1), 0.1, rng=1), float)
    with pytest.raises(ValueError):
        sample_subordinator_increment(Stable(1), 0.0)


def test_exit_sample_is_outside_and_matches_the_batch():
    batch = simulate_paths(DISK, (0.2, 0.1), Stable(1), FAST, 40)
    for p in (0, 17, 39):
        ex = sample_exit(DISK, (0.2, 0.1), Stable(1), PathConfig(FAST.h, FAST.t_max, FAST.seed, p))
        assert not ex.censored
        assert not DISK.contains(ex.x_tau[None])[0]
        assert ex.tau == batch.tau[p]
        assert np.array_equal(ex.x_tau, batch.x_exit[p])


def test_jobs_do_not_change_the_bits():
    n = 2 * CHUNK + 5
    cfg = PathConfig(h=2e-2, t_max=2.0, seed=3)
    a = simulate_paths(Ball((0.0, 0.0), 0.5), (0, 0), Stable(1), cfg, n, jobs=1)
    b = simulate_paths(Ball((0.0, 0.0), 0.5), (0, 0), Stable(1), cfg, n, jobs=2)
    assert np.array_equal(a.tau, b.tau) and np.array_equal(a.x_exit, b.x_exit)


def test_exit_times_are_monotone_in_the_domain():
    # the same path leaves the smaller ball first
    small = simulate_paths(Ball((0.0, 0.0), 0.5), (0, 0), Stable(1), FAST, 500)
    big = simulate_paths(DISK, (0, 0), Stable(1), FAST, 500)
    assert np.all(small.tau <= big.tau)
    assert np.any(small.tau < big.tau)


def test_horizon_too_short():
    with pytest.raises(HorizonTooShort, match="horizon too short"):
        estimate_torsion(DISK, (0, 0), Stable(1), PathConfig(h=1e-2, t_max=0.05), 200)


def test_start_outside_exits_immediately():
    b = simulate_paths(DISK, (2.0, 0.0), Stable(1), FAST, 5)
    assert np.all(b.tau == 0) and not b.censored.any()


def test_feynman_kac_constant_potential_is_an_exact_factor():
    # with c = k every surviving path gets the factor e^{k t} exactly
    k, t = 0.7, 0.5
    base = feynman_kac(DISK, None, 0.0, None, t, (0, 0), Stable(1), FAST, 2000)
    pot = feynman_kac(DISK, lambda x: np.full(len(x), k), 0.0, None, t, (0, 0), Stable(1), FAST, 2000)
    assert pot.mean == pytest.approx(math.exp(k * t) * base.mean, rel=1e-12)
    shifted = feynman_kac(DISK, None, 0.3, None, t, (0, 0), Stable(1), FAST, 2000)
    assert shifted.mean == pytest.approx(math.exp(-0.3 * t) * base.mean, rel=1e-12)


def test_feynman_kac_with_unit_data_is_the_survival_fraction():
    # compare with an exit run over the full horizon on the same paths
    b = simulate_paths(DISK, (0, 0), Stable(1), FAST, 1000)
    est = feynman_kac(DISK, None, 0.0, None, 0.5, (0, 0), Stable(1), FAST, 1000)
    assert est.mean == pytest.approx(np.mean(b.tau > 0.5 + 1e-9))


def test_decay_rate_shifts_exactly_with_a_constant_potential():
    tg = np.arange(0.5, 2.01, 0.25)
    r0 = survival_decay_rate(DISK, Stable(1), None, tg, (0, 0), FAST, 4000)
    r1 = survival_decay_rate(DISK, Stable(1), lambda x: np.full(len(x), 0.4), tg, (0, 0), FAST, 4000)
    assert r1.rate == pytest.approx(r0.rate - 0.4, abs=1e-10)
    assert r0.rate > 0 and r0.stderr > 0


def test_insufficient_survivors():
    with pytest.raises(InsufficientSurvivors):
        survival_decay_rate(Ball((0.0, 0.0), 0.05), Stable(1), None, [0.5, 1.0, 1.5, 2.0],
                            (0, 0), FAST, 200)


def test_path_config_validation():
    with pytest.raises(ValueError):
        PathConfig(h=0.0)
    with pytest.raises(ValueError):
        PathConfig(h=2.0, t_max=1.0)
    assert PathConfig(h=1e-3, t_max=5.0).n_steps == 5000
