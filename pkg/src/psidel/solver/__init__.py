"""Grid solver for non-local Dirichlet problems on balls, boxes and ellipses (d = 1, 2)."""
from .assembly import OperatorMatrix, discretize, exterior_mass, kernel_for
from .grid import Grid, make_grid
from .linear import (DirichletSolver, EigenFailure, EigenPair, PicardDivergence, Resonant,
                     SemilinearResult, principal_eigenpair, solve_dirichlet, solve_semilinear)
from .principles import (AntimaxReport, GapReport, NotSupersolution, abp_check, antimax_check,
                         hopf_ratio, inverse_sign_check, min_singular_value, spectral_gap_check)
from .trace import (AsymmetricTorsion, HypothesisViolated, OverdeterminedVerdict, TraceProfile,
                    ball_torsion, boundary_samples, overdetermined_check, script_H, trace_profile)

__all__ = [
    "Grid", "make_grid", "OperatorMatrix", "discretize", "exterior_mass", "kernel_for",
    "DirichletSolver", "solve_dirichlet", "Resonant", "EigenPair", "EigenFailure",
    "principal_eigenpair", "SemilinearResult", "solve_semilinear", "PicardDivergence",
    "hopf_ratio", "abp_check", "antimax_check", "AntimaxReport", "spectral_gap_check",
    "GapReport", "min_singular_value", "inverse_sign_check", "NotSupersolution",
    "TraceProfile", "trace_profile", "boundary_samples", "ball_torsion", "script_H",
    "AsymmetricTorsion", "HypothesisViolated", "OverdeterminedVerdict", "overdetermined_check",
]
