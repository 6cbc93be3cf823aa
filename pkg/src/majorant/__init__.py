"""Diagonal realization under majorization constraints in a finite trace model.

Decide whether a diagonal target is reachable from a matrix by two-sided
unitary multiplication, and construct the factors when it is.  Profiles and
cell sets live in :mod:`majorant.profile`, the matrix model in
:mod:`majorant.matrixmodel`, conjugation onto a prescribed diagonal in
:mod:`majorant.schurhorn`, the staged two-sided solver in
:mod:`majorant.thompson`, and reference oracles in :mod:`majorant.oracle`.
"""

from .errors import Infeasible, InvariantViolation, PreconditionError
from .profile import (
    DEFAULT_TOL,
    BorelCellSet,
    MajorizationReport,
    StepProfile,
    compress_halves,
    partial_integral,
    rearrange,
    rearrangement_order,
    restrict_equidistributed,
    submajorizes,
)
from .matrixmodel import (
    DiagonalElement,
    FactorElement,
    SpectralResolution,
    eigenvalue_profile,
    expect_diagonal,
    hermitian_gap,
    in_two_sided_orbit,
    in_unitary_orbit,
    polar,
    positivity_from_trace_check,
    singular_profile,
    spectral_projection,
    spectral_resolution,
)
from .schurhorn import (
    SchurHornInstance,
    feasible_schur_horn,
    realize_schur_horn,
    realize_sign_expectation,
)
from .thompson import (
    RealizationResult,
    StageRecord,
    StageTrace,
    ThompsonInstance,
    complete_dominance_solve,
    complete_dominance_step,
    dominance_solve,
    general_solve,
    good_interval_partition,
    reduce_to_positive,
    strict_dominance_solve,
    zero_diagonal,
)
from .oracle import (
    InstanceSpec,
    feasibility_search_2x2,
    gen_feasible,
    gen_infeasible,
    haar_unitary,
    kyfan_bruteforce,
    resolution_convergence,
    two_cell_feasible,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "BorelCellSet",
    "DiagonalElement",
    "FactorElement",
    "Infeasible",
    "InstanceSpec",
    "InvariantViolation",
    "MajorizationReport",
    "PreconditionError",
    "RealizationResult",
    "SchurHornInstance",
    "SpectralResolution",
    "StageRecord",
    "StageTrace",
    "StepProfile",
    "ThompsonInstance",
    "complete_dominance_solve",
    "complete_dominance_step",
    "compress_halves",
    "dominance_solve",
    "eigenvalue_profile",
    "expect_diagonal",
    "feasibility_search_2x2",
    "feasible_schur_horn",
    "gen_feasible",
    "gen_infeasible",
    "general_solve",
    "good_interval_partition",
    "haar_unitary",
    "hermitian_gap",
    "in_two_sided_orbit",
    "in_unitary_orbit",
    "kyfan_bruteforce",
    "partial_integral",
    "polar",
    "positivity_from_trace_check",
    "realize_schur_horn",
    "realize_sign_expectation",
    "rearrange",
    "rearrangement_order",
    "reduce_to_positive",
    "resolution_convergence",
    "restrict_equidistributed",
    "singular_profile",
    "two_cell_feasible",
    "spectral_projection",
    "spectral_resolution",
    "strict_dominance_solve",
    "submajorizes",
    "zero_diagonal",
]
