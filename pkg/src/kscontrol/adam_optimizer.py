"""Adam descent on the reduced cost, with projection for Robin control.

Deterministic full-gradient Adam: exponentially decayed first and second
moment accumulators with bias correction,

    m <- b1 m + (1 - b1) grad          m~ = m / (1 - b1^k)
    z <- b2 z + (1 - b2) grad^2        z~ = z / (1 - b2^k)
    controls <- controls - step * m~ / sqrt(z~ + eps)

the bias-corrected second moment appearing under the square root.  When the
boundary control is of Robin type the updated boundary values are clipped
to their positive part (the admissible set is g >= 0).

The stopping check precedes the parameter update within an iteration and
compares the plain (unweighted) Euclidean norm of the gradient array
against the tolerance; the grid-weighted and max norms are recorded in the
trace alongside it.  The grid-weighted norm is sqrt(dt*dx) times smaller
than the unweighted one and would cross a 1e-4 tolerance almost
immediately on weakly coupled problems, ending runs at their first
iterates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .adjoint_solver import solve_backward
from .cost_gradient import (
    ControlGradient,
    assemble_gradient,
    evaluate_cost,
    gradient_frobenius_norm,
    gradient_max_norm,
    gradient_norm,
)
from .errors import OptimizationError, ValidationError
from .problem import BoundaryControlKind, ControlPair, ProblemSetup
from .state_solver import solve_forward

__all__ = ["AdamConfig", "AdamState", "OptimizationTrace", "adam_step", "optimize"]


@dataclass(frozen=True)
class AdamConfig:
    """Step size, decay rates, regularizer, and stopping parameters.

    ``tol`` bounds the unweighted Euclidean norm of the gradient array;
    ``max_iter`` caps the number of gradient evaluations.
    """

    alpha: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    tol: float = 1e-4
    max_iter: int = 100_000

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise ValidationError("step size alpha must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValidationError("decay rates must lie in [0, 1)")
        if not self.eps > 0.0:
            raise ValidationError("eps must be positive")
        if not self.tol > 0.0:
            raise ValidationError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")


@dataclass(frozen=True, eq=False)
class AdamState:
    """Moment accumulators (shaped like a control gradient) and step count."""

    m_f: np.ndarray = field(repr=False)
    m_g: np.ndarray = field(repr=False)
    z_f: np.ndarray = field(repr=False)
    z_g: np.ndarray = field(repr=False)
    k: int = 0

    @classmethod
    def zeros(cls, setup: ProblemSetup) -> "AdamState":
        N, J = setup.tg.N, setup.sg.J
        return cls(
            m_f=np.zeros((N, J)),
            m_g=np.zeros((N, 2)),
            z_f=np.zeros((N, J)),
            z_g=np.zeros((N, 2)),
            k=0,
        )


@dataclass(frozen=True, eq=False)
class OptimizationTrace:
    """Per-iteration history of a descent run.

    All arrays have one entry per completed iteration (gradient
    evaluation); ``termination`` is "tolerance" or "max_iter";
    ``best_iter`` is the 1-based iteration of the lowest recorded cost.
    """

    cost: np.ndarray
    grad_norm_l2: np.ndarray
    grad_norm_max: np.ndarray
    grad_norm_frob: np.ndarray
    wall_ms: np.ndarray
    termination: str
    best_iter: int

    @property
    def iterations(self) -> int:
        return int(self.cost.shape[0])


def adam_step(
    state: AdamState,
    grad: ControlGradient,
    controls: ControlPair,
    cfg: AdamConfig,
    bkind: BoundaryControlKind,
    setup: ProblemSetup,
) -> tuple[AdamState, ControlPair]:
    """One moment update and parameter step; returns the new state and controls."""
    k = state.k + 1
    m_f = cfg.beta1 * state.m_f + (1.0 - cfg.beta1) * grad.wrt_f
    m_g = cfg.beta1 * state.m_g + (1.0 - cfg.beta1) * grad.wrt_g
    z_f = cfg.beta2 * state.z_f + (1.0 - cfg.beta2) * grad.wrt_f**2
    z_g = cfg.beta2 * state.z_g + (1.0 - cfg.beta2) * grad.wrt_g**2
    c1 = 1.0 - cfg.beta1**k
    c2 = 1.0 - cfg.beta2**k
    new_f = controls.f - cfg.alpha * (m_f / c1) / np.sqrt(z_f / c2 + cfg.eps)
    new_g = controls.g - cfg.alpha * (m_g / c1) / np.sqrt(z_g / c2 + cfg.eps)
    if bkind is BoundaryControlKind.ROBIN:
        new_g = np.maximum(new_g, 0.0)
    new_state = AdamState(m_f=m_f, m_g=m_g, z_f=z_f, z_g=z_g, k=k)
    return new_state, ControlPair.on_masks(new_f, new_g, setup)


def optimize(
    setup: ProblemSetup, cfg: AdamConfig, initial: ControlPair
) -> tuple[ControlPair, OptimizationTrace]:
    """Minimize the reduced cost from ``initial`` controls.

    Each iteration solves forward then backward, assembles the exact
    gradient, records the cost and the three gradient-norm conventions,
    checks the stopping rule, and applies one Adam update.  Returns the
    best-seen controls (lowest recorded cost, not necessarily the last
    iterate) and the trace.
    """
    controls = initial
    state = AdamState.zeros(setup)
    costs: list[float] = []
    norms_l2: list[float] = []
    norms_max: list[float] = []
    norms_frob: list[float] = []
    wall_ms: list[float] = []
    best_cost = np.inf
    best_controls = controls
    best_iter = 0
    termination = "max_iter"
    for k in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        try:
            states = solve_forward(setup, controls)
            adjoints = solve_backward(setup, controls, states)
        except Exception as exc:
            raise OptimizationError(f"solver failure at iteration {k}: {exc}") from exc
        grad = assemble_gradient(states, adjoints, controls, setup)
        cost = evaluate_cost(states, controls, setup)
        if not np.isfinite(cost):
            raise OptimizationError(f"non-finite cost at iteration {k}")
        n_l2 = gradient_norm(grad, setup.tg, setup.sg, setup.bmask)
        n_max = gradient_max_norm(grad)
        n_frob = gradient_frobenius_norm(grad)
        costs.append(cost)
        norms_l2.append(n_l2)
        norms_max.append(n_max)
        norms_frob.append(n_frob)
        if cost < best_cost:
            best_cost = cost
            best_controls = controls
            best_iter = k
        if n_frob <= cfg.tol:
            termination = "tolerance"
            wall_ms.append(1e3 * (time.perf_counter() - t0))
            break
        if k < cfg.max_iter:
            state, controls = adam_step(state, grad, controls, cfg, setup.bkind, setup)
        wall_ms.append(1e3 * (time.perf_counter() - t0))
    trace = OptimizationTrace(
        cost=np.asarray(costs),
        grad_norm_l2=np.asarray(norms_l2),
        grad_norm_max=np.asarray(norms_max),
        grad_norm_frob=np.asarray(norms_frob),
        wall_ms=np.asarray(wall_ms),
        termination=termination,
        best_iter=best_iter,
    )
    return best_controls, trace
