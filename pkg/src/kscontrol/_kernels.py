"""Compiled inner loops shared by the forward, sensitivity, and adjoint solvers.

All kernels operate on raw float64 arrays with 0-based indexing:

* cell fields are ``(J,)``; space-time trajectories are ``(N+1, J)`` with
  row 0 the initial slice; controls are ``(N, J)`` / ``(N, 2)`` with row
  ``n-1`` holding step ``n``.
* tridiagonal systems use full-length off-diagonals where ``lower[0]`` and
  ``upper[J-1]`` are never read (kept zero by every assembly here).

Single-source structure: the per-step system matrices are assembled once
(`v_matrix`, `u_matrix`) and reused by the forward solve, the linearized
(tangent) solve, and - transposed - by the backward adjoint solve, so the
adjoint is the exact transpose of the tangent map at machine precision.
The upwind chemotaxis coupling matrix is symmetric, hence the single
``apply_chemo_coupling`` serves both the tangent and adjoint sides.
"""

import numpy as np
from numba import njit

from .errors import DominanceBreakdownError

KIND_NONE = 0
KIND_ROBIN = 1
KIND_BILINEAR = 2


@njit(cache=True)
def heaviside(x):
    """Heaviside step with the kink convention H(0) = 0.5."""
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return 0.0
    return 0.5


@njit(cache=True)
def thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system by elimination without pivoting.

    Valid for the M-matrix systems produced in this module; a nonpositive
    pivot means the assembly broke diagonal dominance and is reported as
    a breakdown (never expected for validated inputs).
    """
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    piv = diag[0]
    if not piv > 0.0:
        raise DominanceBreakdownError("dominance breakdown: nonpositive pivot")
    cp[0] = upper[0] / piv
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i] * cp[i - 1]
        if not piv > 0.0:
            raise DominanceBreakdownError("dominance breakdown: nonpositive pivot")
        cp[i] = upper[i] / piv
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / piv
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


@njit(cache=True)
def transpose_tridiag(lower, diag, upper):
    """Off-diagonals of the transposed tridiagonal matrix."""
    n = diag.shape[0]
    lt = np.zeros(n)
    ut = np.zeros(n)
    for j in range(1, n):
        lt[j] = upper[j - 1]
    for j in range(n - 1):
        ut[j] = lower[j + 1]
    return lt, diag, ut


@njit(cache=True)
def v_matrix(f_n, g_left, g_right, in_c, bleft, bright, bkind, Dv, lam, sigma, dt, dx):
    """System matrix of the implicit chemical step.

    Row j:  (dx/dt + Dv*deg_j/dx + dx*lam) v_j - (Dv/dx) sum_nbr v_k,
    plus the implicit parts of the control couplings: -dx*(f_j)_- inside the
    control region, +sigma (robin) or -(g)_- (bilinear) at controlled
    boundary cells.  Symmetric, strictly diagonally dominant, M-matrix.
    """
    J = f_n.shape[0]
    lower = np.zeros(J)
    upper = np.zeros(J)
    diag = np.empty(J)
    r = dx / dt
    w = Dv / dx
    for j in range(J):
        d = r + dx * lam
        if j > 0:
            d += w
            lower[j] = -w
        if j < J - 1:
            d += w
            upper[j] = -w
        if in_c[j] and f_n[j] < 0.0:
            d -= dx * f_n[j]
        diag[j] = d
    if bkind == KIND_ROBIN:
        if bleft:
            diag[0] += sigma
        if bright:
            diag[J - 1] += sigma
    elif bkind == KIND_BILINEAR:
        if bleft and g_left < 0.0:
            diag[0] -= g_left
        if bright and g_right < 0.0:
            diag[J - 1] -= g_right
    return lower, diag, upper


@njit(cache=True)
def u_matrix(v_now, Du, chi, dt, dx):
    """System matrix of the implicit cell step at a given chemical state.

    Diffusion plus implicit upwind chemotaxis with drift s = (v_k - v_j)/dx
    toward each neighbor:  diag += Du/dx + chi*(s)_+,  offdiag = -Du/dx +
    chi*(s)_-.  Columns sum to dx/dt, which is what makes the step conserve
    total cell mass.
    """
    J = v_now.shape[0]
    lower = np.zeros(J)
    upper = np.zeros(J)
    diag = np.empty(J)
    r = dx / dt
    w = Du / dx
    for j in range(J):
        d = r
        if j > 0:
            s = (v_now[j - 1] - v_now[j]) / dx
            d += w + chi * max(s, 0.0)
            lower[j] = -w + chi * min(s, 0.0)
        if j < J - 1:
            s = (v_now[j + 1] - v_now[j]) / dx
            d += w + chi * max(s, 0.0)
            upper[j] = -w + chi * min(s, 0.0)
        diag[j] = d
    return lower, diag, upper


@njit(cache=True)
def apply_chemo_coupling(u_n, v_n, x, chi, dx):
    """Action of the (symmetric) chemotaxis coupling matrix on a vector.

    y_j = (chi/dx) * sum_nbr w_jk (x_k - x_j)  with the upwind weights
    w_jk = u_j H(v_k - v_j) + u_k H(v_j - v_k).  This is the derivative of
    the upwind cell flux with respect to the chemical state; the same
    action serves the tangent and adjoint solvers because w is symmetric.
    """
    J = u_n.shape[0]
    y = np.zeros(J)
    for j in range(J):
        acc = 0.0
        if j > 0:
            w = u_n[j] * heaviside(v_n[j - 1] - v_n[j]) + u_n[j - 1] * heaviside(
                v_n[j] - v_n[j - 1]
            )
            acc += w * (x[j - 1] - x[j])
        if j < J - 1:
            w = u_n[j] * heaviside(v_n[j + 1] - v_n[j]) + u_n[j + 1] * heaviside(
                v_n[j] - v_n[j + 1]
            )
            acc += w * (x[j + 1] - x[j])
        y[j] = chi * acc / dx
    return y


@njit(cache=True)
def step_v_kernel(
    v_prev, u_prev, f_n, g_left, g_right, in_c, bleft, bright, bkind, Dv, lam, mu, sigma, dt, dx
):
    """One implicit chemical step: production from u_prev, explicit-implicit
    split of the bilinear terms, implicit Robin flux."""
    J = v_prev.shape[0]
    lower, diag, upper = v_matrix(
        f_n, g_left, g_right, in_c, bleft, bright, bkind, Dv, lam, sigma, dt, dx
    )
    rhs = np.empty(J)
    r = dx / dt
    for j in range(J):
        b = r * v_prev[j] + dx * mu * u_prev[j]
        if in_c[j] and f_n[j] > 0.0:
            b += dx * f_n[j] * v_prev[j]
        rhs[j] = b
    if bkind == KIND_ROBIN:
        if bleft:
            rhs[0] += sigma * g_left
        if bright:
            rhs[J - 1] += sigma * g_right
    elif bkind == KIND_BILINEAR:
        if bleft and g_left > 0.0:
            rhs[0] += g_left * v_prev[0]
        if bright and g_right > 0.0:
            rhs[J - 1] += g_right * v_prev[J - 1]
    return thomas(lower, diag, upper, rhs)


@njit(cache=True)
def step_u_kernel(u_prev, v_now, Du, chi, dt, dx):
    """One implicit cell step with upwind chemotaxis against v_now."""
    J = u_prev.shape[0]
    lower, diag, upper = u_matrix(v_now, Du, chi, dt, dx)
    rhs = (dx / dt) * u_prev
    return thomas(lower, diag, upper, rhs)


@njit(cache=True)
def forward_kernel(
    u0, v0, f, g, in_c, bleft, bright, bkind, Du, chi, Dv, lam, mu, sigma, dt, dx
):
    """March the state system: per step solve the chemical, then the cells."""
    N = f.shape[0]
    J = u0.shape[0]
    u = np.empty((N + 1, J))
    v = np.empty((N + 1, J))
    u[0] = u0
    v[0] = v0
    for n in range(1, N + 1):
        v[n] = step_v_kernel(
            v[n - 1],
            u[n - 1],
            f[n - 1],
            g[n - 1, 0],
            g[n - 1, 1],
            in_c,
            bleft,
            bright,
            bkind,
            Dv,
            lam,
            mu,
            sigma,
            dt,
            dx,
        )
        u[n] = step_u_kernel(u[n - 1], v[n], Du, chi, dt, dx)
    return u, v


@njit(cache=True)
def step_phi_kernel(
    phi_next, psi_next, u_n, v_n, ud_n, in_o, Du, chi, mu, track_coeff, dt, dx
):
    """One backward step of the cell-equation multiplier.

    System matrix is the transpose of the cell step matrix at state v_n;
    sources are the next multipliers and the scaled tracking residual
    track_coeff = 1 / (T * |observation region|).
    """
    J = u_n.shape[0]
    lo, di, up = u_matrix(v_n, Du, chi, dt, dx)
    lower, diag, upper = transpose_tridiag(lo, di, up)
    rhs = np.empty(J)
    r = dx / dt
    for j in range(J):
        b = r * phi_next[j] + dx * mu * psi_next[j]
        if in_o[j]:
            b += track_coeff * dx * (u_n[j] - ud_n[j])
        rhs[j] = b
    return thomas(lower, diag, upper, rhs)


@njit(cache=True)
def step_psi_kernel(
    psi_next,
    phi_n,
    u_n,
    v_n,
    f_n,
    f_next,
    gl_n,
    gr_n,
    gl_next,
    gr_next,
    in_c,
    bleft,
    bright,
    bkind,
    Dv,
    chi,
    lam,
    sigma,
    dt,
    dx,
):
    """One backward step of the chemical-equation multiplier.

    The matrix equals the (symmetric) chemical step matrix at step n; the
    sources carry the one-step look-ahead of the explicit bilinear parts
    and the chemotaxis coupling applied to phi_n.
    """
    J = psi_next.shape[0]
    lower, diag, upper = v_matrix(
        f_n, gl_n, gr_n, in_c, bleft, bright, bkind, Dv, lam, sigma, dt, dx
    )
    coup = apply_chemo_coupling(u_n, v_n, phi_n, chi, dx)
    rhs = np.empty(J)
    r = dx / dt
    for j in range(J):
        b = r * psi_next[j] - coup[j]
        if in_c[j] and f_next[j] > 0.0:
            b += dx * f_next[j] * psi_next[j]
        rhs[j] = b
    if bkind == KIND_BILINEAR:
        if bleft and gl_next > 0.0:
            rhs[0] += gl_next * psi_next[0]
        if bright and gr_next > 0.0:
            rhs[J - 1] += gr_next * psi_next[J - 1]
    return thomas(lower, diag, upper, rhs)


@njit(cache=True)
def backward_kernel(
    u,
    v,
    f,
    g,
    u_d,
    in_c,
    in_o,
    bleft,
    bright,
    bkind,
    Du,
    chi,
    Dv,
    lam,
    mu,
    sigma,
    dt,
    dx,
    track_coeff,
):
    """March the adjoint system backward from zero terminal multipliers.

    Returned arrays have rows 0..N where row i holds step i+1, i.e. the
    last row is the terminal zero slice.
    """
    N = f.shape[0]
    J = u.shape[1]
    phi = np.zeros((N + 1, J))
    psi = np.zeros((N + 1, J))
    zeros_j = np.zeros(J)
    for n in range(N, 0, -1):
        phi_next = phi[n]
        psi_next = psi[n]
        if n < N:
            f_next = f[n]
            gl_next = g[n, 0]
            gr_next = g[n, 1]
        else:
            f_next = zeros_j
            gl_next = 0.0
            gr_next = 0.0
        phi_n = step_phi_kernel(
            phi_next, psi_next, u[n], v[n], u_d[n - 1], in_o, Du, chi, mu, track_coeff, dt, dx
        )
        phi[n - 1] = phi_n
        psi[n - 1] = step_psi_kernel(
            psi_next,
            phi_n,
            u[n],
            v[n],
            f[n - 1],
            f_next,
            g[n - 1, 0],
            g[n - 1, 1],
            gl_next,
            gr_next,
            in_c,
            bleft,
            bright,
            bkind,
            Dv,
            chi,
            lam,
            sigma,
            dt,
            dx,
        )
    return phi, psi


@njit(cache=True)
def sensitivity_kernel(
    u,
    v,
    f,
    g,
    df,
    dg,
    in_c,
    bleft,
    bright,
    bkind,
    Du,
    chi,
    Dv,
    lam,
    mu,
    sigma,
    dt,
    dx,
):
    """March the tangent system for a control direction (df, dg).

    Reuses the forward step matrices at each step; the direction enters
    through the derivative of the explicit-implicit control couplings,
    with the kink convention H(0) = 0.5.
    """
    N = f.shape[0]
    J = u.shape[1]
    U = np.zeros((N + 1, J))
    V = np.zeros((N + 1, J))
    r = dx / dt
    for n in range(1, N + 1):
        fl = f[n - 1]
        gl_n = g[n - 1, 0]
        gr_n = g[n - 1, 1]
        lower, diag, upper = v_matrix(
            fl, gl_n, gr_n, in_c, bleft, bright, bkind, Dv, lam, sigma, dt, dx
        )
        rhs = np.empty(J)
        for j in range(J):
            b = r * V[n - 1, j] + dx * mu * U[n - 1, j]
            if in_c[j]:
                if fl[j] > 0.0:
                    b += dx * fl[j] * V[n - 1, j]
                b += dx * (
                    heaviside(fl[j]) * v[n - 1, j] + heaviside(-fl[j]) * v[n, j]
                ) * df[n - 1, j]
            rhs[j] = b
        if bkind == KIND_ROBIN:
            if bleft:
                rhs[0] += sigma * dg[n - 1, 0]
            if bright:
                rhs[J - 1] += sigma * dg[n - 1, 1]
        elif bkind == KIND_BILINEAR:
            if bleft:
                if gl_n > 0.0:
                    rhs[0] += gl_n * V[n - 1, 0]
                rhs[0] += (
                    heaviside(gl_n) * v[n - 1, 0] + heaviside(-gl_n) * v[n, 0]
                ) * dg[n - 1, 0]
            if bright:
                if gr_n > 0.0:
                    rhs[J - 1] += gr_n * V[n - 1, J - 1]
                rhs[J - 1] += (
                    heaviside(gr_n) * v[n - 1, J - 1] + heaviside(-gr_n) * v[n, J - 1]
                ) * dg[n - 1, 1]
        V[n] = thomas(lower, diag, upper, rhs)

        lo, di, up = u_matrix(v[n], Du, chi, dt, dx)
        coup = apply_chemo_coupling(u[n], v[n], V[n], chi, dx)
        rhs_u = np.empty(J)
        for j in range(J):
            rhs_u[j] = r * U[n - 1, j] - coup[j]
        U[n] = thomas(lo, di, up, rhs_u)
    return U, V
