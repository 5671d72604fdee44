"""Numerical laboratory for Bernstein functions of the Laplacian.

Submodules: :mod:`bernstein` (catalog, Levy densities, jump kernels),
:mod:`ladder` (ladder exponent, renewal function, boundary gauge),
:mod:`mc` (subordinate Brownian motion Monte Carlo), :mod:`solver`
(grid discretization and maximum-principle checks) and :mod:`experiments`
(the verification experiments behind the ``psidel-lab`` command).
"""
from . import bernstein, domains, ladder, mc, rng, solver
from .bernstein import LogBoosted, LogDamped, Relativistic, Stable, SumStable, from_descriptor
from .domains import Ball, Box, Ellipse, domain_from_descriptor

__version__ = "0.1.0"

__all__ = [
    "bernstein", "domains", "ladder", "mc", "rng", "solver",
    "Stable", "Relativistic", "SumStable", "LogDamped", "LogBoosted", "from_descriptor",
    "Ball", "Box", "Ellipse", "domain_from_descriptor",
]
