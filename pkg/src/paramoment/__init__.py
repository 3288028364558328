"""Moment relaxations for polynomial optimization with polynomial parameter
dependence.

Given min_x f(x, y) over a basic semialgebraic set, parametrized by y with a
known marginal measure, the package bounds the averaged optimal value
int J(y) dphi by a hierarchy of semidefinite relaxations, recovers polynomial
lower approximations of y -> J(y) from the duals, estimates moments and
persistency of the optimal-solution map, and reconstructs minimizer
coordinates as maximum-entropy densities. A sampling oracle provides
independent ground truth at desk scale.
"""

from .marginal import (
    MarginalMoments,
    explicit_moments,
    load_moments_csv,
    moments_for,
    uniform_box_moments,
    uniform_simplex_moments,
)
from .maxent import (
    DensityEstimate,
    MaxentError,
    MomentTarget,
    density_eval,
    gauss_legendre_rule,
    lower_bound_for_shift,
    maxent_fit,
    shifted_moments,
)
from .moments import (
    MomentSequence,
    StructuredMatrix,
    build_localizing_matrix,
    build_moment_matrix,
    instantiate,
    moment_index,
)
from .oracle import (
    OracleConfig,
    OracleError,
    OracleResult,
    evaluate_grid,
    integrate_value_function,
    reference_coordinate_moments,
    solve_pointwise,
)
from .polynomials import (
    PolyError,
    Polynomial,
    basis_size,
    constant,
    enumerate_basis,
    poly_eval,
    poly_mul,
    poly_parse,
    poly_to_string,
    unit_index,
    variable,
)
from .postproc import (
    CoordinateMoments,
    PostprocError,
    coordinate_moment_curve,
    functional_estimate,
    mean_vector,
    persistency,
)
from .problem import (
    MarginalSpec,
    ParametricProblem,
    add_ball_constraint,
    box_param_constraints,
    min_relaxation_order,
    simplex_param_constraints,
    validate,
)
from .relaxation import (
    ConicProgram,
    CvxoptBackend,
    PiecewisePoly,
    RelaxationError,
    RelaxationSolution,
    SolverBackend,
    assemble_dual,
    assemble_primal,
    check_infeasibility_certificate,
    envelope_update,
    program_to_text,
    recover_dual_from_primal,
    solve_dual,
    solve_primal,
)

__version__ = "0.1.0"

__all__ = [
    "Polynomial", "PolyError", "basis_size", "enumerate_basis", "unit_index",
    "constant", "variable", "poly_parse", "poly_to_string", "poly_eval", "poly_mul",
    "ParametricProblem", "MarginalSpec", "box_param_constraints",
    "simplex_param_constraints", "min_relaxation_order", "add_ball_constraint",
    "validate",
    "MarginalMoments", "uniform_box_moments", "uniform_simplex_moments",
    "explicit_moments", "load_moments_csv", "moments_for",
    "MomentSequence", "StructuredMatrix", "moment_index", "build_moment_matrix",
    "build_localizing_matrix", "instantiate",
    "ConicProgram", "RelaxationSolution", "RelaxationError", "SolverBackend",
    "CvxoptBackend", "assemble_primal", "assemble_dual", "solve_primal", "solve_dual",
    "recover_dual_from_primal", "PiecewisePoly", "envelope_update",
    "check_infeasibility_certificate", "program_to_text",
    "MomentTarget", "DensityEstimate", "MaxentError", "lower_bound_for_shift",
    "shifted_moments", "gauss_legendre_rule", "maxent_fit", "density_eval",
    "CoordinateMoments", "PostprocError", "functional_estimate", "mean_vector",
    "persistency", "coordinate_moment_curve",
    "OracleConfig", "OracleResult", "OracleError", "solve_pointwise", "evaluate_grid",
    "integrate_value_function", "reference_coordinate_moments",
    "__version__",
]
