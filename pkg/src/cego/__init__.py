"""Constrained efficient global optimization toolkit.

Gaussian-process surrogates with confidence-bound acquisition for black-box
minimization under black-box inequality constraints, plus competing
constrained Bayesian-optimization policies and a seeded benchmark harness.
"""

__version__ = "0.1.0"

from .domain import Domain
from .gp import GpModel, Observation, add_observation
from .grid_eval import GridEvaluation, constrained_argmin, evaluate_grid
from .hyperfit import fit_hyperparameters
from .info_gain import max_info_gain
from .kernels import Kernel, kernel_eval
from .metrics import (
    RunRecord,
    best_so_far_series,
    compute_normalizers,
    constrained_regret,
    cumulative_violation,
    normalized_regret_violation,
)
from .policies import (
    POLICIES,
    AlgorithmState,
    BetaSchedule,
    Decision,
    observe,
    propose,
)
from .problems import (
    Problem,
    artificial_infeasible_problem,
    artificial_problem,
    problem_from_config,
    williams_otto_problem,
)
from .runner import RunConfig, emit_metrics, feasible_start_sampler, run_experiment

__all__ = [
    "__version__",
    "Domain",
    "Kernel",
    "kernel_eval",
    "GpModel",
    "Observation",
    "add_observation",
    "max_info_gain",
    "fit_hyperparameters",
    "GridEvaluation",
    "evaluate_grid",
    "constrained_argmin",
    "BetaSchedule",
    "AlgorithmState",
    "Decision",
    "POLICIES",
    "propose",
    "observe",
    "Problem",
    "artificial_problem",
    "artificial_infeasible_problem",
    "williams_otto_problem",
    "problem_from_config",
    "RunRecord",
    "constrained_regret",
    "normalized_regret_violation",
    "best_so_far_series",
    "cumulative_violation",
    "compute_normalizers",
    "RunConfig",
    "run_experiment",
    "feasible_start_sampler",
    "emit_metrics",
]
