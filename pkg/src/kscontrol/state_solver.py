"""Forward solver: semi-implicit in time, upwind finite volume in space.

Each time step solves two tridiagonal systems.  First the chemical update

    dx (v_j^n - v_j^{n-1})/dt + Dv sum_nbr (v_j^n - v_k^n)/dx
        + dx lam v_j^n - dx mu u_j^{n-1}
    = dx [ (f_j^n)_+ v_j^{n-1} + (f_j^n)_- v_j^n ] 1_c
        + boundary flux P at controlled endpoint cells,

with the Robin flux sigma (g - v^n) implicit in v and the bilinear flux
(g)_+ v^{n-1} + (g)_- v^n split explicit/implicit.  Then the cell update

    dx (u_j^n - u_j^{n-1})/dt
        + sum_nbr { Du (u_j^n - u_k^n)/dx + chi [ (s)_+ u_j^n + (s)_- u_k^n ] } = 0,
    s = (v_k^n - v_j^n)/dx.

Both matrices are M-matrices (strictly diagonally dominant by columns with
nonpositive off-diagonals), which yields unconditional positivity of u and
v and exact conservation of the total cell mass; summing the chemical
equation over cells gives the discrete balance law for the total chemical.
Fluxes pair every adjacent cell couple, including (1,2) and (J-1,J), and
the boundary flux enters exactly at cells 1 and J; this is the bookkeeping
under which the diffusive and chemotactic contributions cancel pairwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DominanceBreakdownError, ValidationError
from .problem import BoundaryControlKind, ControlPair, ProblemSetup

__all__ = [
    "TridiagonalSystem",
    "StateTrajectory",
    "solve_tridiagonal",
    "step_v",
    "step_u",
    "solve_forward",
    "v_system",
    "u_system",
]

_KIND_CODE = {
    BoundaryControlKind.NONE: _kernels.KIND_NONE,
    BoundaryControlKind.ROBIN: _kernels.KIND_ROBIN,
    BoundaryControlKind.BILINEAR: _kernels.KIND_BILINEAR,
}


def _kind_code(setup: ProblemSetup) -> int:
    return _KIND_CODE[setup.bkind]


@dataclass(frozen=True, eq=False)
class TridiagonalSystem:
    """Tridiagonal linear system with off-diagonals of length n-1.

    Every system assembled by this package has a strictly positive diagonal,
    nonpositive off-diagonals, and strict diagonal dominance by columns or
    rows (M-matrix), so elimination without pivoting is safe.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self) -> None:
        n = self.diag.shape[0]
        if self.rhs.shape != (n,) or self.lower.shape != (n - 1,) or self.upper.shape != (n - 1,):
            raise ValidationError("tridiagonal system has inconsistent band lengths")

    def dense(self) -> np.ndarray:
        """Dense matrix form, for testing and inspection only."""
        return (
            np.diag(self.diag)
            + np.diag(self.lower, -1)
            + np.diag(self.upper, 1)
        )


def solve_tridiagonal(sys: TridiagonalSystem) -> np.ndarray:
    """Solve a module-produced tridiagonal system by the Thomas algorithm.

    Raises :class:`DominanceBreakdownError` when a pivot is not strictly
    positive, which for the systems built here can only mean an assembly
    bug upstream.
    """
    n = sys.diag.shape[0]
    lower = np.zeros(n)
    upper = np.zeros(n)
    if n > 1:
        lower[1:] = sys.lower
        upper[:-1] = sys.upper
    return _kernels.thomas(lower, np.ascontiguousarray(sys.diag, dtype=np.float64), upper, np.ascontiguousarray(sys.rhs, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class StateTrajectory:
    """States of a forward solve, shape (N+1, J) with row 0 the initial data.

    Componentwise nonnegative, and the weighted cell total dx * sum_j u[n, j]
    is constant in n up to roundoff.
    """

    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("u", "v"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)


def _boundary_values(g_n) -> tuple[float, float]:
    g_n = np.asarray(g_n, dtype=np.float64).reshape(2)
    return float(g_n[0]), float(g_n[1])


def step_v(
    u_prev: np.ndarray,
    v_prev: np.ndarray,
    f_n: np.ndarray,
    g_n,
    setup: ProblemSetup,
) -> np.ndarray:
    """Advance the chemical field by one implicit step.

    ``g_n`` holds the (left, right) boundary control values for this step.
    Preserves nonnegativity of the output for nonnegative inputs.
    """
    p = setup.phys
    gl, gr = _boundary_values(g_n)
    return _kernels.step_v_kernel(
        np.ascontiguousarray(v_prev, dtype=np.float64),
        np.ascontiguousarray(u_prev, dtype=np.float64),
        np.ascontiguousarray(f_n, dtype=np.float64),
        gl,
        gr,
        setup.omega_c.member,
        setup.bmask.left,
        setup.bmask.right,
        _kind_code(setup),
        p.Dv,
        p.lam,
        p.mu,
        p.sigma,
        setup.tg.dt,
        setup.sg.dx,
    )


def step_u(u_prev: np.ndarray, v_new: np.ndarray, setup: ProblemSetup) -> np.ndarray:
    """Advance the cell field by one implicit upwind step against ``v_new``.

    Output is nonnegative for nonnegative input and has the same weighted
    total dx * sum u as the input, up to roundoff.
    """
    p = setup.phys
    return _kernels.step_u_kernel(
        np.ascontiguousarray(u_prev, dtype=np.float64),
        np.ascontiguousarray(v_new, dtype=np.float64),
        p.Du,
        p.chi,
        setup.tg.dt,
        setup.sg.dx,
    )


def solve_forward(setup: ProblemSetup, controls: ControlPair) -> StateTrajectory:
    """Run the full forward scheme from the setup's initial data.

    Initial slices come straight from ``setup.u0`` / ``setup.v0``; each of
    the N steps solves the chemical system, then the cell system.
    """
    p = setup.phys
    N, J = setup.tg.N, setup.sg.J
    if controls.f.shape != (N, J) or controls.g.shape != (N, 2):
        raise ValidationError("controls are not shaped for the setup's grids")
    try:
        u, v = _kernels.forward_kernel(
            setup.u0,
            setup.v0,
            controls.f,
            controls.g,
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
    except DominanceBreakdownError:
        _locate_forward_breakdown(setup, controls)  # raises with the step index
        raise  # pragma: no cover - the replay must reproduce the failure
    return StateTrajectory(u=u, v=v)


def _locate_forward_breakdown(setup: ProblemSetup, controls: ControlPair) -> None:
    """Replay a failed forward solve step by step to name the failing index.

    Only runs on the error path; a breakdown means the setup bypassed
    validation (the validated assemblies are M-matrices).
    """
    u_prev, v_prev = setup.u0, setup.v0
    for n in range(1, setup.tg.N + 1):
        try:
            v_new = step_v(u_prev, v_prev, controls.f[n - 1], controls.g[n - 1], setup)
            u_prev = step_u(u_prev, v_new, setup)
            v_prev = v_new
        except DominanceBreakdownError as exc:
            raise DominanceBreakdownError(f"forward solve failed at step {n}: {exc}") from None


def v_system(
    u_prev: np.ndarray,
    v_prev: np.ndarray,
    f_n: np.ndarray,
    g_n,
    setup: ProblemSetup,
) -> TridiagonalSystem:
    """Assemble (without solving) the chemical-step system, for inspection."""
    p = setup.phys
    gl, gr = _boundary_values(g_n)
    lower, diag, upper = _kernels.v_matrix(
        np.ascontiguousarray(f_n, dtype=np.float64),
        gl,
        gr,
        setup.omega_c.member,
        setup.bmask.left,
        setup.bmask.right,
        _kind_code(setup),
        p.Dv,
        p.lam,
        p.sigma,
        setup.tg.dt,
        setup.sg.dx,
    )
    J = diag.shape[0]
    r = setup.sg.dx / setup.tg.dt
    rhs = r * np.asarray(v_prev, dtype=np.float64) + setup.sg.dx * p.mu * np.asarray(
        u_prev, dtype=np.float64
    )
    pos = np.where(setup.omega_c.member, np.maximum(np.asarray(f_n), 0.0), 0.0)
    rhs = rhs + setup.sg.dx * pos * np.asarray(v_prev, dtype=np.float64)
    if setup.bkind is BoundaryControlKind.ROBIN:
        if setup.bmask.left:
            rhs[0] += p.sigma * gl
        if setup.bmask.right:
            rhs[J - 1] += p.sigma * gr
    elif setup.bkind is BoundaryControlKind.BILINEAR:
        if setup.bmask.left and gl > 0.0:
            rhs[0] += gl * v_prev[0]
        if setup.bmask.right and gr > 0.0:
            rhs[J - 1] += gr * v_prev[J - 1]
    return TridiagonalSystem(lower=lower[1:], diag=diag, upper=upper[:-1], rhs=rhs)


def u_system(u_prev: np.ndarray, v_new: np.ndarray, setup: ProblemSetup) -> TridiagonalSystem:
    """Assemble (without solving) the cell-step system, for inspection."""
    p = setup.phys
    lower, diag, upper = _kernels.u_matrix(
        np.ascontiguousarray(v_new, dtype=np.float64),
        p.Du,
        p.chi,
        setup.tg.dt,
        setup.sg.dx,
    )
    rhs = (setup.sg.dx / setup.tg.dt) * np.asarray(u_prev, dtype=np.float64)
    return TridiagonalSystem(lower=lower[1:], diag=diag, upper=upper[:-1], rhs=rhs)


def cell_totals(traj: StateTrajectory, setup: ProblemSetup) -> np.ndarray:
    """Weighted per-step totals dx * sum_j u[n, j] for n = 0..N."""
    return setup.sg.dx * traj.u.sum(axis=1)


def chemical_balance_residuals(
    traj: StateTrajectory, controls: ControlPair, setup: ProblemSetup
) -> np.ndarray:
    """Per-step defect of the discrete total-chemical balance law.

    For each step the identity

        sum dx (v^n - v^{n-1})/dt + lam sum dx v^n - mu sum dx u^{n-1}
          - sum dx [(f)_+ v^{n-1} + (f)_- v^n] 1_c - sum_endpoints P = 0

    holds exactly for the exact solution of the assembled system; the
    returned residuals are scaled by the magnitude of the participating
    terms and measure only linear-solver roundoff.
    """
    p = setup.phys
    dx, dt = setup.sg.dx, setup.tg.dt
    N, J = setup.tg.N, setup.sg.J
    in_c = setup.omega_c.member
    res = np.empty(N)
    for n in range(1, N + 1):
        v_now, v_prev, u_prev = traj.v[n], traj.v[n - 1], traj.u[n - 1]
        f_n = controls.f[n - 1]
        terms = [
            dx * np.sum(v_now - v_prev) / dt,
            p.lam * dx * np.sum(v_now),
            -p.mu * dx * np.sum(u_prev),
            -dx
            * np.sum(
                (np.maximum(f_n, 0.0) * v_prev + np.minimum(f_n, 0.0) * v_now)[in_c]
            ),
        ]
        if setup.bkind is not BoundaryControlKind.NONE:
            for mask_on, col, cell in (
                (setup.bmask.left, 0, 0),
                (setup.bmask.right, 1, J - 1),
            ):
                if not mask_on:
                    continue
                gk = controls.g[n - 1, col]
                if setup.bkind is BoundaryControlKind.ROBIN:
                    flux = p.sigma * (gk - v_now[cell])
                else:
                    flux = max(gk, 0.0) * v_prev[cell] + min(gk, 0.0) * v_now[cell]
                terms.append(-flux)
        scale = max(1.0, sum(abs(t) for t in terms))
        res[n - 1] = abs(sum(terms)) / scale
    return res
