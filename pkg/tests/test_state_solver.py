import numpy as np
import pytest

from kscontrol import (
    BoundaryControlKind,
    ControlPair,
    DominanceBreakdownError,
    PhysicalParams,
    TridiagonalSystem,
    solve_forward,
    solve_tridiagonal,
    step_u,
    step_v,
)
from kscontrol import _kernels
from kscontrol.state_solver import (
    cell_totals,
    chemical_balance_residuals,
    u_system,
    v_system,
)

from conftest import make_setup, random_controls


# --- tridiagonal solver -------------------------------------------------


def test_tridiagonal_symmetric_2x2():
    sys = TridiagonalSystem(
        lower=np.array([-1.0]),
        diag=np.array([2.0, 2.0]),
        upper=np.array([-1.0]),
        rhs=np.array([1.0, 1.0]),
    )
    assert solve_tridiagonal(sys) == pytest.approx([1.0, 1.0])


def test_tridiagonal_identity():
    rng = np.random.default_rng(3)
    r = rng.normal(size=6)
    sys = TridiagonalSystem(
        lower=np.zeros(5), diag=np.ones(6), upper=np.zeros(5), rhs=r
    )
    assert solve_tridiagonal(sys) == pytest.approx(list(r), abs=0)


def test_tridiagonal_hand_checked_3x3():
    sys = TridiagonalSystem(
        lower=np.array([-1.0, -1.0]),
        diag=np.array([3.0, 3.0, 3.0]),
        upper=np.array([-1.0, -1.0]),
        rhs=np.array([2.0, 1.0, 2.0]),
    )
    assert solve_tridiagonal(sys) == pytest.approx([1.0, 1.0, 1.0])


def test_tridiagonal_matches_dense_solve():
    rng = np.random.default_rng(11)
    n = 40
    lower = -rng.uniform(0.1, 1.0, n - 1)
    upper = -rng.uniform(0.1, 1.0, n - 1)
    diag = 2.5 + rng.uniform(0.0, 1.0, n)
    rhs = rng.normal(size=n)
    sys = TridiagonalSystem(lower=lower, diag=diag, upper=upper, rhs=rhs)
    expected = np.linalg.solve(sys.dense(), rhs)
    assert solve_tridiagonal(sys) == pytest.approx(list(expected), rel=1e-12)


def test_tridiagonal_breakdown_is_reported():
    # violates the M-matrix precondition: elimination hits a negative pivot
    sys = TridiagonalSystem(
        lower=np.array([4.0]),
        diag=np.array([1.0, 1.0]),
        upper=np.array([4.0]),
        rhs=np.array([1.0, 1.0]),
    )
    with pytest.raises(DominanceBreakdownError, match="dominance breakdown"):
        solve_tridiagonal(sys)


# --- chemical step ------------------------------------------------------


def test_step_v_uniform_fixed_point():
    setup = make_setup(phys=PhysicalParams(lam=1.0, mu=1.0))
    c = 2.7
    u_prev = np.full(setup.sg.J, c)
    v_prev = np.full(setup.sg.J, c)
    f0 = np.zeros(setup.sg.J)
    v_new = step_v(u_prev, v_prev, f0, (0.0, 0.0), setup)
    assert v_new == pytest.approx([c] * setup.sg.J, rel=1e-14)


def test_step_v_single_cell_recurrence():
    # one unknown: (v - 3)/0.5 + v - 1 = 0  =>  v = 7/3  (dx cancels)
    v = _kernels.step_v_kernel(
        np.array([3.0]),
        np.array([1.0]),
        np.array([0.0]),
        0.0,
        0.0,
        np.array([False]),
        False,
        False,
        _kernels.KIND_NONE,
        1.0,  # Dv (no neighbors, unused)
        1.0,  # lam
        1.0,  # mu
        1.0,  # sigma
        0.5,  # dt
        0.25,  # dx
    )
    assert v == pytest.approx([7.0 / 3.0], rel=1e-15)


@pytest.mark.parametrize("kind", [BoundaryControlKind.BILINEAR, BoundaryControlKind.ROBIN])
def test_step_v_nonnegative(kind, rng):
    setup = make_setup(J=30, bkind=kind)
    for _ in range(20):
        u_prev = rng.uniform(0.0, 3.0, 30)
        v_prev = rng.uniform(0.0, 3.0, 30)
        f_n = rng.uniform(-2.0, 2.0, 30)
        g = rng.uniform(-2.0, 2.0, 2)
        if kind is BoundaryControlKind.ROBIN:
            g = np.abs(g)
        v_new = step_v(u_prev, v_prev, f_n, g, setup)
        assert v_new.min() >= -1e-13


# --- cell step ----------------------------------------------------------


def test_step_u_uniform_chemical_leaves_u_unchanged(rng):
    setup = make_setup(J=25)
    u_prev = rng.uniform(0.0, 2.0, 25)
    v_uniform = np.full(25, 1.3)
    u_new = step_u(u_prev, v_uniform, setup)
    # uniform v: no chemotaxis drift; pure diffusion still moves u, so only
    # a uniform u is a fixed point
    u_flat = np.full(25, 0.8)
    assert step_u(u_flat, v_uniform, setup) == pytest.approx([0.8] * 25, rel=1e-14)
    # and mass is conserved even for rough data
    assert u_new.sum() == pytest.approx(u_prev.sum(), rel=1e-13)


def test_step_u_conserves_mass_and_positivity(rng):
    setup = make_setup(J=40)
    for _ in range(25):
        u_prev = rng.uniform(0.0, 5.0, 40)
        v_new = rng.uniform(0.0, 5.0, 40)
        u_new = step_u(u_prev, v_new, setup)
        assert u_new.min() >= -1e-13
        total_prev = setup.sg.dx * u_prev.sum()
        total_new = setup.sg.dx * u_new.sum()
        assert abs(total_new - total_prev) / total_prev <= 1e-12


# --- assembled systems --------------------------------------------------


def _assert_m_matrix_by_columns(sys: TridiagonalSystem):
    assert np.all(sys.diag > 0.0)
    assert np.all(sys.lower <= 0.0)
    assert np.all(sys.upper <= 0.0)
    dense = sys.dense()
    col_sums = dense.sum(axis=0)
    assert np.all(col_sums > 0.0)


def test_v_system_is_symmetric_spd_m_matrix(rng):
    setup = make_setup(J=30, bkind=BoundaryControlKind.BILINEAR)
    u_prev = rng.uniform(0.0, 2.0, 30)
    v_prev = rng.uniform(0.0, 2.0, 30)
    f_n = rng.uniform(-1.0, 1.0, 30)
    sys = v_system(u_prev, v_prev, f_n, (0.4, -0.7), setup)
    _assert_m_matrix_by_columns(sys)
    assert sys.lower == pytest.approx(list(sys.upper))  # symmetric
    assert np.linalg.eigvalsh(sys.dense()).min() > 0.0
    # nonnegative data gives a nonnegative right-hand side
    assert np.all(sys.rhs >= 0.0)


def test_u_system_chemotaxis_part_has_vanishing_column_sums(rng):
    setup = make_setup(J=30)
    v_new = rng.uniform(0.0, 2.0, 30)
    u_prev = rng.uniform(0.0, 2.0, 30)
    sys = u_system(u_prev, v_new, setup)
    _assert_m_matrix_by_columns(sys)
    # column sums of the full matrix reduce to dx/dt: diffusion and the
    # upwind chemotaxis part both cancel columnwise
    r = setup.sg.dx / setup.tg.dt
    col_sums = sys.dense().sum(axis=0)
    assert col_sums == pytest.approx([r] * 30, rel=1e-13)


# --- full forward solve -------------------------------------------------


def test_solve_forward_constant_fixed_point():
    setup = make_setup(phys=PhysicalParams(lam=1.0, mu=1.0))
    c = 1.6
    setup = make_setup(
        phys=PhysicalParams(lam=1.0, mu=1.0),
        u0=np.full(20, c),
        v0=np.full(20, c),
    )
    traj = solve_forward(setup, ControlPair.zeros(setup))
    assert np.all(np.abs(traj.u - c) < 1e-13)
    assert np.all(np.abs(traj.v - c) < 1e-13)


def test_solve_forward_reference_uncontrolled_run():
    setup = make_setup(J=100, N=100)
    traj = solve_forward(setup, ControlPair.zeros(setup))
    assert traj.u.shape == (101, 100)
    assert traj.u.min() >= -1e-13 and traj.v.min() >= -1e-13
    totals = cell_totals(traj, setup)
    assert np.max(np.abs(totals - totals[0])) / totals[0] <= 1e-12
    # the uncontrolled dynamics aggregate cells near the endpoints
    assert traj.u[-1, 0] > traj.u[0, 0]


@pytest.mark.parametrize(
    "kind", [BoundaryControlKind.NONE, BoundaryControlKind.ROBIN, BoundaryControlKind.BILINEAR]
)
def test_chemical_balance_identity_per_step(kind, rng):
    setup = make_setup(J=35, N=25, bkind=kind)
    controls = random_controls(
        setup, rng, nonneg_g=kind is BoundaryControlKind.ROBIN
    )
    traj = solve_forward(setup, controls)
    res = chemical_balance_residuals(traj, controls, setup)
    assert res.max() <= 1e-10


def test_refinement_sanity():
    # halving dx and dt shrinks the change in the final-time solution
    def final_u(J, N):
        setup = make_setup(J=J, N=N, u_d=np.ones((N, J)))
        return solve_forward(setup, ControlPair.zeros(setup)).u[-1]

    u1 = final_u(25, 25)
    u2 = final_u(50, 50)
    u3 = final_u(100, 100)
    # restrict finer solutions to the coarser grid by averaging cell pairs
    d1 = np.abs(u2.reshape(25, 2).mean(axis=1) - u1).max()
    d2 = np.abs(u3.reshape(50, 2).mean(axis=1) - u2).max()
    assert d2 < d1


def test_solve_forward_rejects_misshaped_controls():
    from kscontrol import ValidationError

    setup = make_setup(J=20, N=20)
    other = make_setup(J=10, N=10, u_d=np.ones((10, 10)))
    with pytest.raises(ValidationError):
        solve_forward(setup, ControlPair.zeros(other))


def test_forward_breakdown_names_the_failing_step():
    # bypass validation with a negative diffusion coefficient: the very
    # first chemical system loses diagonal dominance
    from kscontrol import BoundaryMask, ProblemSetup, CostWeights, ValidationError
    from kscontrol import RegionMask, build_grids, cell_averages
    import kscontrol

    sg, tg = build_grids(1.0, 12, 0.05, 6)
    bad = ProblemSetup(
        sg=sg,
        tg=tg,
        phys=PhysicalParams(Dv=-50.0),
        weights=CostWeights(),
        omega_c=RegionMask.from_bools(np.ones(12, dtype=bool), sg),
        omega_o=RegionMask.from_bools(np.ones(12, dtype=bool), sg),
        bmask=BoundaryMask(False, False),
        bkind=BoundaryControlKind.NONE,
        u0=np.ones(12),
        v0=np.ones(12),
        u_d=np.ones((6, 12)),
    )
    with pytest.raises(DominanceBreakdownError, match="step 1"):
        solve_forward(bad, ControlPair.zeros(bad))
