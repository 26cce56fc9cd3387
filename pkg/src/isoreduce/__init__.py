"""Isospectral reduction of weighted graphs over structural sets, for finite
graphs and for countable graphs given by weight oracles."""

from .errors import (
    BudgetExceededError,
    ConvergenceError,
    DomainError,
    EigenSolverError,
    GraphParseError,
    InputParseError,
    InvalidParamsError,
    IsoreduceError,
    NotAnEigenvalueError,
    NotStructuralError,
    NumericalError,
    ParamsParseError,
    SigmaError,
    WindowTooSmallError,
)
from .graph_core import (
    DepthAssignment,
    StructuralVerdict,
    WeightedGraph,
    all_branches,
    compute_depths,
    enumerate_branches,
    is_structural_set,
    parse_graph,
    random_structural_graph,
    serialize_graph,
    sigma_values,
)
from .reduction import (
    ReducedEvaluation,
    SchurReducer,
    SpectrumReport,
    find_reduced_roots,
    reconstruct_eigenvector,
    reduce_branches,
    reduce_linear_solve,
    reduced_spectrum,
    restrict_eigenvector,
)
from .infinite import (
    CountableGraph,
    TruncationReport,
    TypeACertificate,
    TypeBCertificate,
    Violation,
    check_type_A,
    check_type_B,
    depth_sets,
    one_inf_norm_gap,
    reconstruct_fixed_point,
    reduced_series,
    taboo_weight,
)
from .markov_family import (
    FamilyParams,
    StationaryMeasure,
    family_weight,
    monte_carlo_stationary,
    reduced_2x2,
    stationary_closed_form,
    stationary_power_iteration,
    truncated_weight,
    truncation_convergence,
)

__version__ = "0.1.0"
