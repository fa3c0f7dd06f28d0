"""Truncated fractional p-Laplacian toolkit on enclosing-ball grids.

Energies, first (s,p)-eigenpairs, Dirichlet solves and the inequality
checks that certify them, all on uniform-grid discretizations of bounded
open sets inside their relative enclosing ball.
"""

from .asymptotics import (
    EquivalenceReport,
    ScalingReport,
    SweepReport,
    SweepRow,
    TranslationReport,
    dyadic_shifts,
    equivalence_check,
    holder_report,
    s_sweep,
    scaling_check,
    translation_quotient_check,
)
from .core import (
    GridFunction,
    PairFunction,
    apply_operator,
    gagliardo_energy,
    lp_norm,
    nonlocal_divergence,
    nonlocal_gradient,
    rayleigh_quotient,
)
from .dirichlet import (
    ComparisonReport,
    DirichletProblem,
    comparison_check,
    monotonicity_certificate,
    psmall_pairwise_gap,
    solve_dirichlet,
)
from .domain import DomainSpec, GridDomain, build_domain, dilate, poincare_constant
from .eigen import Eigenpair, clarkson_gap, first_eigenpair, p2_oracle, seminorm_distance
from .errors import ConvergenceError
from .params import FracParams, SolverConfig

__all__ = [
    "ComparisonReport",
    "ConvergenceError",
    "DirichletProblem",
    "DomainSpec",
    "Eigenpair",
    "EquivalenceReport",
    "FracParams",
    "GridDomain",
    "GridFunction",
    "PairFunction",
    "ScalingReport",
    "SolverConfig",
    "SweepReport",
    "SweepRow",
    "TranslationReport",
    "apply_operator",
    "build_domain",
    "clarkson_gap",
    "comparison_check",
    "dilate",
    "dyadic_shifts",
    "equivalence_check",
    "first_eigenpair",
    "gagliardo_energy",
    "holder_report",
    "lp_norm",
    "monotonicity_certificate",
    "nonlocal_divergence",
    "nonlocal_gradient",
    "p2_oracle",
    "poincare_constant",
    "psmall_pairwise_gap",
    "rayleigh_quotient",
    "s_sweep",
    "scaling_check",
    "seminorm_distance",
    "solve_dirichlet",
    "translation_quotient_check",
]
