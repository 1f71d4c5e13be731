"""Maximum entropy on the mean for linear inverse problems.

Build an empirical prior from image samples, minimize the smooth strongly
convex dual objective, and recover the primal image together with its
optimal discrete measure.
"""

from .dataset import (
    ImageSet,
    SampleMatrix,
    load_images,
    nearest_neighbor,
    normalize,
    parse_idx,
    parse_idx_labels,
    subsample,
    write_idx,
)
from .diagnostics import (
    MgfBoundsReport,
    ProblemConstants,
    RateRecord,
    RateTable,
    compute_constants,
    epi_distance_estimate,
    epi_distance_grid,
    error_bound_formula,
    lipschitz_bound,
    mgf_bounds_check,
    primal_error_bound,
    rate_experiment,
    two_cluster_instance,
)
from .noise import NoiseSpec, add_gaussian, add_salt_pepper
from .operators import (
    LinearOperator,
    dense,
    dense_from_csv,
    identity,
    separable_blur,
    sigma_min,
    spectral_norm,
)
from .prior import (
    EmpiricalPrior,
    LogMgfEval,
    log_mgf,
    log_mgf_eval,
    log_mgf_hessian,
    mgf,
)
from .recovery import (
    RecoveredSolution,
    kl_to_prior,
    pixel_mask,
    recover_primal,
    relative_error,
    threshold_measure,
)
from .solver import (
    DualProblem,
    DualSolveResult,
    QuadraticFidelity,
    SolverConfig,
    dual_gradient,
    dual_objective,
    epsilon_distance_bound,
    solve_dual,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
