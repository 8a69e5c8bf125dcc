"""Feasibility analysis and dependency-investment optimization for
development projects run by asynchronously interacting local and system
teams.

The model: a project of m tasks evolves per step under one of two linear
work transformations, switching when the system team feeds its results
back after a random interval. Averaging over the interval distribution
gives the generalized work transformation matrix M; the project is
feasible iff its spectral radius (the feasibility index) is below one.
Management can buy reductions of individual dependency strengths, and the
two natural allocation problems (best index under a budget, cheapest
allocation meeting an index target) are convex in log-variables.
"""

from .errors import (
    DegenerateSpectrum,
    Infeasible,
    InvariantViolation,
    MalformedFile,
    PdoptError,
    Uncalibratable,
)
from .model import (
    Coordinate,
    DsmSet,
    FeedbackDistribution,
    ProjectState,
    TransitionPair,
    WtmSet,
    apply_allocation,
    assemble_transitions,
    build_wtms,
    generalized_wtm,
    project_matrix,
    tunable_coordinates,
)
from .netgen import (
    BoundaryResult,
    CentralityReport,
    ExtendedDsm,
    aggregate_investment_by_task,
    calibrate_extended_dsm,
    centralities,
    default_interval_distribution,
    generate_graph,
    run_boundary_experiment,
)
from .optimize import (
    AllocationResult,
    CostModel,
    PosynomialCostModel,
    baseline_allocation,
    cost_of,
    solve_budget_constrained,
    solve_performance_constrained,
    sweep_budget,
    total_cost,
)
from .project_io import ProjectDefaults, ProjectFile, parse_project, serialize_project
from .reports import emit_reports
from .simulate import (
    Trajectory,
    completion_time,
    expected_epoch_states,
    mean_trajectory,
    monte_carlo_completion,
    run_trajectory,
    sample_interval_pmf,
)
from .spectral import PerronPair, fd_grad_log_rho, grad_log_rho, perron_pair, spectral_radius

__version__ = "0.1.0"

__all__ = [
    "AllocationResult",
    "BoundaryResult",
    "CentralityReport",
    "Coordinate",
    "CostModel",
    "DegenerateSpectrum",
    "DsmSet",
    "ExtendedDsm",
    "FeedbackDistribution",
    "Infeasible",
    "InvariantViolation",
    "MalformedFile",
    "PdoptError",
    "PerronPair",
    "PosynomialCostModel",
    "ProjectDefaults",
    "ProjectFile",
    "ProjectState",
    "Trajectory",
    "TransitionPair",
    "Uncalibratable",
    "WtmSet",
    "aggregate_investment_by_task",
    "apply_allocation",
    "assemble_transitions",
    "baseline_allocation",
    "build_wtms",
    "calibrate_extended_dsm",
    "centralities",
    "completion_time",
    "cost_of",
    "default_interval_distribution",
    "emit_reports",
    "expected_epoch_states",
    "fd_grad_log_rho",
    "generalized_wtm",
    "generate_graph",
    "grad_log_rho",
    "mean_trajectory",
    "monte_carlo_completion",
    "parse_project",
    "perron_pair",
    "project_matrix",
    "run_boundary_experiment",
    "run_trajectory",
    "sample_interval_pmf",
    "serialize_project",
    "solve_budget_constrained",
    "solve_performance_constrained",
    "spectral_radius",
    "sweep_budget",
    "total_cost",
    "tunable_coordinates",
]
