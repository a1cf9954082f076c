"""Discrete optimal control of the 1D Keller-Segel chemotaxis system.

The pipeline is discretize-then-optimize: the state system is discretized
with an upwind finite-volume scheme (positivity-preserving and
mass-conservative), the gradient of the discrete reduced cost is computed
exactly through the discrete adjoint, and the cost is minimized with Adam.
"""

__version__ = "0.1.0"

from .adam_optimizer import AdamConfig, AdamState, OptimizationTrace, adam_step, optimize
from .adjoint_solver import AdjointTrajectory, solve_backward, step_phi, step_psi
from .cost_gradient import (
    ControlGradient,
    assemble_gradient,
    evaluate_cost,
    fd_directional_derivative,
    gradient_frobenius_norm,
    gradient_max_norm,
    gradient_norm,
    perturbation_scan,
    tracking_misfit,
)
from .discretization import (
    BoundaryMask,
    RegionMask,
    SpatialGrid,
    TimeGrid,
    build_grids,
    cell_averages,
    inner_product,
    interval_to_mask,
)
from .errors import DominanceBreakdownError, OptimizationError, ValidationError
from .experiment_runner import (
    ExperimentSpec,
    RunArtifacts,
    load_config,
    run_preset,
    write_outputs,
)
from .problem import (
    BoundaryControlKind,
    ControlPair,
    CostWeights,
    PhysicalParams,
    ProblemSetup,
    validate,
)
from .sensitivity_solver import (
    SensitivityTrajectory,
    directional_derivative_via_sensitivity,
    solve_sensitivity,
)
from .state_solver import (
    StateTrajectory,
    TridiagonalSystem,
    solve_forward,
    solve_tridiagonal,
    step_u,
    step_v,
)

__all__ = [
    "AdamConfig",
    "AdamState",
    "AdjointTrajectory",
    "BoundaryControlKind",
    "BoundaryMask",
    "ControlGradient",
    "ControlPair",
    "CostWeights",
    "DominanceBreakdownError",
    "ExperimentSpec",
    "OptimizationError",
    "OptimizationTrace",
    "PhysicalParams",
    "ProblemSetup",
    "RegionMask",
    "RunArtifacts",
    "SensitivityTrajectory",
    "SpatialGrid",
    "StateTrajectory",
    "TimeGrid",
    "TridiagonalSystem",
    "ValidationError",
    "adam_step",
    "assemble_gradient",
    "build_grids",
    "cell_averages",
    "directional_derivative_via_sensitivity",
    "evaluate_cost",
    "fd_directional_derivative",
    "gradient_frobenius_norm",
    "gradient_max_norm",
    "gradient_norm",
    "inner_product",
    "interval_to_mask",
    "load_config",
    "optimize",
    "perturbation_scan",
    "run_preset",
    "solve_backward",
    "solve_forward",
    "solve_sensitivity",
    "solve_tridiagonal",
    "step_phi",
    "step_psi",
    "step_u",
    "step_v",
    "tracking_misfit",
    "validate",
    "write_outputs",
]
