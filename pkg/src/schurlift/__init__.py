"""Interpolation and intertwining lifting on weighted Bergman spaces.

The package solves Nevanlinna-Pick-type interpolation problems over the
unit ball and unit polydisc by explicit commutant lifting: a block
colligation is assembled from a generating identity, its transfer
function is the interpolant, and every emitted function ships with
numerical certificates (positivity eigenvalues, generating-identity
residuals, and kernel-basis verification of the lift).
"""

from .errors import (
    BalanceViolation,
    DimensionMismatch,
    DomainViolation,
    EvaluationFailure,
    GramMismatch,
    IllConditioned,
    NearSingularResolvent,
    NotContraction,
    NotConverged,
    NotHypercontraction,
    NotIntertwining,
    NotPositive,
    NotPure,
    ParseError,
    SchurliftError,
    ValidationError,
)
from .kernels import (
    KernelSpec,
    ball_coeff,
    inverse_kernel_coeffs,
    kernel_eval,
    polydisc_coeff,
)
from .model_space import (
    KernelSubspace,
    TupleOperator,
    build_subspace,
    model_tuple,
    multiplier_adjoint_action,
    np_target_operator,
)
from .hypercontraction import (
    DefectData,
    PurityReport,
    cp_map,
    defect,
    dilation_coefficients,
    hereditary_ball,
    hereditary_polydisc,
    purity_check,
    sigma_sum,
)
from .colligation import (
    Colligation,
    build_ball_colligation,
    build_polydisc_colligation,
    complete_pairs,
)
from .transfer import (
    GridSpec,
    TransferFunction,
    grid_points,
    schur_agler_certificate_ball,
    series_partial_lift,
    sup_norm_scan,
    transfer_function,
    write_scan_csv,
)
from .lifting_ball import (
    CompositeLift,
    Infeasible,
    LiftResult,
    check_positivity,
    dilate_p_to_m,
    factorization_criterion,
    lift_ball,
    lift_p_gt_m,
    np_solve,
    verify_lift,
)
from .lifting_polydisc import (
    AglerDecomposition,
    Inconclusive,
    agler_feasibility,
    f_operators,
    lift_polydisc,
    np_solve_polydisc,
    psi_gamma_diagnostics,
)

__version__ = "0.1.0"

__all__ = [
    "AglerDecomposition",
    "BalanceViolation",
    "Colligation",
    "CompositeLift",
    "DefectData",
    "DimensionMismatch",
    "DomainViolation",
    "EvaluationFailure",
    "GramMismatch",
    "GridSpec",
    "IllConditioned",
    "Inconclusive",
    "Infeasible",
    "KernelSpec",
    "KernelSubspace",
    "LiftResult",
    "NearSingularResolvent",
    "NotContraction",
    "NotConverged",
    "NotHypercontraction",
    "NotIntertwining",
    "NotPositive",
    "NotPure",
    "ParseError",
    "PurityReport",
    "SchurliftError",
    "TransferFunction",
    "TupleOperator",
    "ValidationError",
    "agler_feasibility",
    "ball_coeff",
    "build_ball_colligation",
    "build_polydisc_colligation",
    "build_subspace",
    "check_positivity",
    "complete_pairs",
    "cp_map",
    "defect",
    "dilate_p_to_m",
    "dilation_coefficients",
    "f_operators",
    "factorization_criterion",
    "grid_points",
    "hereditary_ball",
    "hereditary_polydisc",
    "inverse_kernel_coeffs",
    "kernel_eval",
    "lift_ball",
    "lift_p_gt_m",
    "lift_polydisc",
    "model_tuple",
    "multiplier_adjoint_action",
    "np_solve",
    "np_solve_polydisc",
    "np_target_operator",
    "polydisc_coeff",
    "psi_gamma_diagnostics",
    "purity_check",
    "schur_agler_certificate_ball",
    "series_partial_lift",
    "sigma_sum",
    "sup_norm_scan",
    "transfer_function",
    "verify_lift",
]
