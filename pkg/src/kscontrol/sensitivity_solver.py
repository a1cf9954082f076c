"""Tangent (linearized) solver: state derivatives along a control direction.

For a direction (df, dg) the pair (U, V) solves the forward scheme
linearized at (states, controls), with forcing

    dx [ H(f_j^n) v_j^{n-1} + H(-f_j^n) v_j^n ] df_j^n  1_c          (chemical)
    + P_g dg at controlled endpoint cells,  P_g = sigma (Robin)
      or H(g) v^{n-1} + H(-g) v^n (bilinear),

and the cross term chi sum w_jk (V_k - V_j)/dx in the cell equation.  The
solve is linear in the direction, so one pass per direction replaces the
per-component unit solves, which are recovered as the special case of an
indicator direction.  H uses the kink convention H(0) = 0.5.

This module is the gradient oracle: its directional derivatives must agree
with the adjoint-assembled gradient to roundoff (discrete duality) and
with divided differences of the forward solve away from kinks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .problem import ControlPair, ProblemSetup
from .state_solver import StateTrajectory, _kind_code

__all__ = [
    "SensitivityTrajectory",
    "solve_sensitivity",
    "directional_derivative_via_sensitivity",
]


@dataclass(frozen=True, eq=False)
class SensitivityTrajectory:
    """Tangent states of shape (N+1, J); the initial slices are zero."""

    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("U", "V"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)


def solve_sensitivity(
    setup: ProblemSetup,
    controls: ControlPair,
    states: StateTrajectory,
    direction: ControlPair,
) -> SensitivityTrajectory:
    """Solve the tangent system along ``direction`` at the given linearization
    point; ``states`` must come from ``solve_forward`` on the same inputs."""
    p = setup.phys
    U, V = _kernels.sensitivity_kernel(
        states.u,
        states.v,
        controls.f,
        controls.g,
        direction.f,
        direction.g,
        setup.omega_c.member,
        setup.bmask.left,
        setup.bmask.right,
        _kind_code(setup),
        p.Du,
        p.chi,
        p.Dv,
        p.lam,
        p.mu,
        p.sigma,
        setup.tg.dt,
        setup.sg.dx,
    )
    return SensitivityTrajectory(U=U, V=V)


def directional_derivative_via_sensitivity(
    setup: ProblemSetup,
    controls: ControlPair,
    states: StateTrajectory,
    direction: ControlPair,
) -> float:
    """Chain-rule derivative of the reduced cost along a control direction.

    Returns

        (1/(T |Omega_o|)) sum dt dx (u - u_d) U 1_o
        + (alpha_f/(T |Omega_c|)) sum dt dx f df 1_c
        + (alpha_g/T) sum dt g dg over masked endpoints,

    with (U, V) the tangent states for the direction.
    """
    sens = solve_sensitivity(setup, controls, states, direction)
    dt, dx, T = setup.tg.dt, setup.sg.dx, setup.tg.T
    in_o = setup.omega_o.member
    resid = states.u[1:] - setup.u_d
    total = dt * dx * float(np.sum((resid * sens.U[1:])[:, in_o])) / (
        T * setup.omega_o.measure
    )
    w = setup.weights
    if w.alpha_f != 0.0:
        in_c = setup.omega_c.member
        total += (
            w.alpha_f
            / (T * setup.omega_c.measure)
            * dt
            * dx
            * float(np.sum((controls.f * direction.f)[:, in_c]))
        )
    if w.alpha_g != 0.0:
        gmask = np.array([setup.bmask.left, setup.bmask.right])
        total += (
            w.alpha_g
            / T
            * dt
            * float(np.sum((controls.g * direction.g)[:, gmask]))
        )
    return total
