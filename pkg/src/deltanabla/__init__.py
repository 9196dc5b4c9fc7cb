"""Exact calculus on finite time scales and solvers for product-form
delta-nabla isoperimetric variational problems."""

from .expressions import (
    EvaluationError,
    Expr,
    Lagrangian,
    ParseError,
    constant_lagrangian,
    differentiate,
    evaluate,
    make_lagrangian,
    parse,
    to_str,
)
from .functional import (
    EL1,
    EL2,
    DeltaNablaFunctional,
    EvaluationBreakdown,
    ExtremalCheck,
    ResidualFormMismatch,
    ResidualReport,
    el_residual,
    eval_functional,
    is_extremal_for_K,
    iso_residual,
)
from .oracle import (
    ExampleVerification,
    IdentityFuzz,
    KktReport,
    fd_gradient,
    identity_fuzz,
    kkt_check,
    verify_example,
)
from .problemfile import LoadedProblem, ProblemFileError, emit_problem, load_problem
from .solver import (
    ClosedFormMeta,
    IsoperimetricProblem,
    SolveResult,
    SolverOptions,
    StationaryPoint,
    closed_form_example,
    discrete_gradient,
    example_problem,
    find_abnormal,
    solve_normal,
)
from .timescale import (
    DomainError,
    GridFunction,
    GridShapeError,
    TimeScale,
    delta_derivative,
    delta_integral,
    diamond_norm,
    grain,
    nabla_derivative,
    nabla_integral,
    shift,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "GridFunction",
    "GridShapeError",
    "TimeScale",
    "delta_derivative",
    "delta_integral",
    "diamond_norm",
    "grain",
    "nabla_derivative",
    "nabla_integral",
    "shift",
    "EvaluationError",
    "Expr",
    "Lagrangian",
    "ParseError",
    "constant_lagrangian",
    "differentiate",
    "evaluate",
    "make_lagrangian",
    "parse",
    "to_str",
    "EL1",
    "EL2",
    "DeltaNablaFunctional",
    "EvaluationBreakdown",
    "ExtremalCheck",
    "ResidualFormMismatch",
    "ResidualReport",
    "el_residual",
    "eval_functional",
    "is_extremal_for_K",
    "iso_residual",
    "ClosedFormMeta",
    "IsoperimetricProblem",
    "SolveResult",
    "SolverOptions",
    "StationaryPoint",
    "closed_form_example",
    "discrete_gradient",
    "example_problem",
    "find_abnormal",
    "solve_normal",
    "ExampleVerification",
    "IdentityFuzz",
    "KktReport",
    "fd_gradient",
    "identity_fuzz",
    "kkt_check",
    "verify_example",
    "LoadedProblem",
    "ProblemFileError",
    "emit_problem",
    "load_problem",
    "__version__",
]
