"""A short tour of the library, from a Bernstein function to boundary behaviour.

Run with ``python demos/walkthrough.py`` (under a minute on one core).
Each step prints what it computes next to an independent reference value.
"""
import functools
import math

import numpy as np

from psidel import Ball, Ellipse, Relativistic, Stable
from psidel.ladder import comparison_constant, gauge_phi, kappa_limit, renewal_function
from psidel.mc import PathConfig, estimate_torsion
from psidel.solver import (discretize, hopf_ratio, make_grid, overdetermined_check,
                           principal_eigenpair, script_H, solve_dirichlet)


def section(title):
    print(f"\n== {title}")


# 1. Two Bernstein functions: the half Laplacian and a tempered relative of it.
stable = Stable(1)  # Psi(x) = sqrt(x)
rel = Relativistic(1, 1)  # Psi(x) = sqrt(x + 1) - 1
section("Bernstein functions")
for x in (0.01, 1.0, 100.0):
    print(f"x = {x:7g}   sqrt(x) = {float(stable(x)):.6f}   sqrt(x+1)-1 = {float(rel(x)):.6f}")

# 2. Renewal function of the ladder-height process.  For the stable case it is
#    r^(1/2) / Gamma(3/2); the tempered one behaves like that near 0 only.
section("renewal function V")
r = np.array([1e-3, 1e-1, 1.0, 10.0])
print("r        V_stable   closed form   V_rel")
for ri, vs, vr in zip(r, renewal_function(stable, r), renewal_function(rel, r)):
    print(f"{ri:<8g} {vs:.6f}   {math.sqrt(ri) / math.gamma(1.5):.6f}      {vr:.6f}")
print(f"two-sided constant for the tempered case: C = {comparison_constant(rel):.4f}")
print(f"kappa = lim V/phi at 0: stable {kappa_limit(stable).value:.6f} "
      f"(2/sqrt(pi) = {2 / math.sqrt(math.pi):.6f}), tempered {kappa_limit(rel).value:.6f}")

# 3. Torsion on the unit disk, three ways: lattice solve, closed form, Monte Carlo.
section("torsion u = E[tau] on the unit disk")
disk = Ball((0.0, 0.0), 1.0)
grid = make_grid(disk, 0.05)
op = discretize(stable, grid)
u = solve_dirichlet(op, 0.0, -1.0)
mc = estimate_torsion(disk, (0.0, 0.0), stable, PathConfig(h=2e-3, t_max=5.0, seed=1), 20_000)
print(f"lattice (h=0.05, {grid.n} nodes): {u[grid.center_node]:.4f}")
print(f"closed form 2/pi               : {2 / math.pi:.4f}")
print(f"Monte Carlo (20000 paths)      : {mc.mean:.4f} +- {mc.stderr:.4f}")

# 4. Principal eigenpair and the boundary rate: u and phi_D both decay like
#    phi(delta) = sqrt(delta) at the boundary, so their ratio stays bounded below.
section("principal eigenpair and the boundary rate")
eig = principal_eigenpair(op)
print(f"lambda_D = {eig.lam:.5f}  (residual {eig.residual:.1e})")
print(f"min u/phi(delta)     near the boundary: {hopf_ratio(u, grid, stable):.4f}")
print(f"min phi_D/phi(delta) near the boundary: {hopf_ratio(eig.phi, grid, stable):.4f}")
d = np.array([0.2, 0.1, 0.05])
print("gauge phi(delta) at", d, "=", np.round(gauge_phi(stable, d), 4))

# 5. The boundary trace of the torsion function: constant on balls, not on ellipses.
section("boundary trace Tr(u/phi)")
_H = functools.lru_cache(lambda rad: script_H(rad, stable))


def H_of(rad):
    # boundary radii of the disk differ in the last bits; round before caching
    return _H(round(float(rad), 12))


H = {rad: H_of(rad) for rad in (0.5, 1.0, 2.0)}
print("H(r) on balls:", {k: round(v, 4) for k, v in H.items()},
      f"  H(2)/H(1) = {H[2.0] / H[1.0]:.4f} (sqrt 2 = {math.sqrt(2):.4f})")
for dom in (disk, Ellipse(1.5, 1.0)):
    v = overdetermined_check(dom, stable, H_of, 0.05, H=H_of)
    print(f"{dom.kind:8s} trace = H(|x|)? {v.consistent}   witnesses above/below: "
          f"{len(v.above)}/{len(v.below)}")
