"""Backward-in-time adjoint solver for the discrete state scheme.

The multipliers (phi for the cell equation, psi for the chemical equation)
start from zero terminal slices and march backward; per step, phi solves
the transpose of the cell-step system and psi solves the (symmetric)
chemical-step system:

    phi:  dx (phi^n - phi^{n+1})/dt + Du sum (phi_j^n - phi_k^n)/dx
            - dx mu psi^{n+1} - chi sum (s)_+ (phi_k^n - phi_j^n)
          = dx (u^n - u_d^n) 1_o / (T |Omega_o|)

    psi:  dx (psi^n - psi^{n+1})/dt + Dv sum (psi_j^n - psi_k^n)/dx
            + dx lam psi^n
            - dx [ (f^n)_- psi^n + (f^{n+1})_+ psi^{n+1} ] 1_c
            - boundary adjoint coupling
            + chi sum w_jk (phi_k^n - phi_j^n)/dx = 0

with w_jk = u_j H(v_k - v_j) + u_k H(v_j - v_k).  The chemotaxis coupling
acts on all cells (not only the control region): it is the transpose of
the state linearization, which carries no control indicator, and the
finite-difference gradient oracle confirms this reading.  Boundary
coupling: +sigma psi^n for Robin; (g^{n+1})_+ psi^{n+1} + (g^n)_- psi^n
for bilinear.  Look-ahead controls at the terminal step are zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DominanceBreakdownError, ValidationError
from .problem import ControlPair, ProblemSetup
from .state_solver import StateTrajectory, _kind_code

__all__ = ["AdjointTrajectory", "step_phi", "step_psi", "solve_backward"]


@dataclass(frozen=True, eq=False)
class AdjointTrajectory:
    """Multipliers of a backward solve, shape (N+1, J).

    Row ``i`` holds step ``i+1``; the last row is the terminal slice, which
    is identically zero.
    """

    phi: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("phi", "psi"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)


def step_phi(
    phi_next: np.ndarray,
    psi_next: np.ndarray,
    u_n: np.ndarray,
    v_n: np.ndarray,
    u_d_n: np.ndarray,
    setup: ProblemSetup,
) -> np.ndarray:
    """One backward step of the cell-equation multiplier at state (u_n, v_n)."""
    p = setup.phys
    track_coeff = 1.0 / (setup.tg.T * setup.omega_o.measure)
    return _kernels.step_phi_kernel(
        np.ascontiguousarray(phi_next, dtype=np.float64),
        np.ascontiguousarray(psi_next, dtype=np.float64),
        np.ascontiguousarray(u_n, dtype=np.float64),
        np.ascontiguousarray(v_n, dtype=np.float64),
        np.ascontiguousarray(u_d_n, dtype=np.float64),
        setup.omega_o.member,
        p.Du,
        p.chi,
        p.mu,
        track_coeff,
        setup.tg.dt,
        setup.sg.dx,
    )


def step_psi(
    psi_next: np.ndarray,
    phi_n: np.ndarray,
    u_n: np.ndarray,
    v_n: np.ndarray,
    f_n: np.ndarray,
    f_next: np.ndarray,
    g_n,
    g_next,
    setup: ProblemSetup,
) -> np.ndarray:
    """One backward step of the chemical-equation multiplier.

    ``f_next`` / ``g_next`` are the step n+1 controls entering the explicit
    look-ahead terms; pass zeros at the terminal step.
    """
    p = setup.phys
    g_n = np.asarray(g_n, dtype=np.float64).reshape(2)
    g_next = np.asarray(g_next, dtype=np.float64).reshape(2)
    return _kernels.step_psi_kernel(
        np.ascontiguousarray(psi_next, dtype=np.float64),
        np.ascontiguousarray(phi_n, dtype=np.float64),
        np.ascontiguousarray(u_n, dtype=np.float64),
        np.ascontiguousarray(v_n, dtype=np.float64),
        np.ascontiguousarray(f_n, dtype=np.float64),
        np.ascontiguousarray(f_next, dtype=np.float64),
        float(g_n[0]),
        float(g_n[1]),
        float(g_next[0]),
        float(g_next[1]),
        setup.omega_c.member,
        setup.bmask.left,
        setup.bmask.right,
        _kind_code(setup),
        p.Dv,
        p.chi,
        p.lam,
        p.sigma,
        setup.tg.dt,
        setup.sg.dx,
    )


def solve_backward(
    setup: ProblemSetup, controls: ControlPair, states: StateTrajectory
) -> AdjointTrajectory:
    """Run the full backward solve against a completed forward trajectory."""
    p = setup.phys
    N, J = setup.tg.N, setup.sg.J
    if states.u.shape != (N + 1, J):
        raise ValidationError("state trajectory is not shaped for the setup's grids")
    track_coeff = 1.0 / (setup.tg.T * setup.omega_o.measure)
    try:
        phi, psi = _kernels.backward_kernel(
            states.u,
            states.v,
            controls.f,
            controls.g,
            setup.u_d,
            setup.omega_c.member,
            setup.omega_o.member,
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
            track_coeff,
        )
    except DominanceBreakdownError:
        _locate_backward_breakdown(setup, controls, states)  # raises with the index
        raise  # pragma: no cover - the replay must reproduce the failure
    return AdjointTrajectory(phi=phi, psi=psi)


def _locate_backward_breakdown(
    setup: ProblemSetup, controls: ControlPair, states: StateTrajectory
) -> None:
    """Replay a failed backward solve to name the failing step (error path)."""
    N, J = setup.tg.N, setup.sg.J
    phi_next = np.zeros(J)
    psi_next = np.zeros(J)
    zeros = np.zeros(J)
    for n in range(N, 0, -1):
        f_next = controls.f[n] if n < N else zeros
        g_next = controls.g[n] if n < N else np.zeros(2)
        try:
            phi_n = step_phi(
                phi_next, psi_next, states.u[n], states.v[n], setup.u_d[n - 1], setup
            )
            psi_next = step_psi(
                psi_next,
                phi_n,
                states.u[n],
                states.v[n],
                controls.f[n - 1],
                f_next,
                controls.g[n - 1],
                g_next,
                setup,
            )
            phi_next = phi_n
        except DominanceBreakdownError as exc:
            raise DominanceBreakdownError(
                f"backward solve failed at step {n}: {exc}"
            ) from None
