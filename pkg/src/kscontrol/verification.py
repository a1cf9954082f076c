"""Randomized invariant and oracle checks shared by the CLI and the tests.

Each check builds its own seeded instances, so results are reproducible.
The checks mirror the solver guarantees: conservation, positivity, the
total-chemical balance law, adjoint/tangent duality, and agreement of the
adjoint gradient with central finite differences of the reduced cost.

Robin instances draw nonnegative boundary controls: the admissible set for
Robin control is g >= 0, and the positivity guarantee relies on it (the
chemical system's right-hand side stays nonnegative).  Bilinear instances
use sign-changing controls throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adjoint_solver import solve_backward
from .cost_gradient import assemble_gradient, fd_directional_derivative
from .discretization import BoundaryMask, RegionMask, build_grids
from .problem import (
    BoundaryControlKind,
    ControlPair,
    CostWeights,
    PhysicalParams,
    ProblemSetup,
    validate,
)
from .sensitivity_solver import directional_derivative_via_sensitivity
from .state_solver import (
    cell_totals,
    chemical_balance_residuals,
    solve_forward,
)

__all__ = [
    "CheckResult",
    "random_instance",
    "check_forward_invariants",
    "check_duality",
    "check_gradient_vs_fd",
    "run_all",
]

_KINDS = (
    BoundaryControlKind.NONE,
    BoundaryControlKind.ROBIN,
    BoundaryControlKind.BILINEAR,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_mask(rng: np.random.Generator, grid) -> RegionMask:
    J = grid.J
    i = int(rng.integers(0, J - 1))
    j = int(rng.integers(i + 1, J + 1))
    member = np.zeros(J, dtype=bool)
    member[i:j] = True
    return RegionMask.from_bools(member, grid)


def random_instance(
    rng: np.random.Generator,
    kind: BoundaryControlKind,
    J: int | None = None,
    N: int | None = None,
    weights: CostWeights = CostWeights(),
    away_from_kinks: bool = False,
) -> tuple[ProblemSetup, ControlPair]:
    """A validated random problem with random controls.

    ``away_from_kinks`` bounds every control entry away from zero by 0.1,
    which keeps finite-difference probes off the nonsmooth set of the
    positive/negative-part splittings.
    """
    if J is None:
        J = int(rng.integers(10, 101))
    if N is None:
        N = int(rng.integers(10, 101))
    sg, tg = build_grids(L=1.0, J=J, T=0.05, N=N)
    omega_c = _random_mask(rng, sg)
    omega_o = _random_mask(rng, sg)
    if kind is BoundaryControlKind.NONE:
        bmask = BoundaryMask(False, False)
    else:
        choice = int(rng.integers(0, 3))
        bmask = BoundaryMask(left=choice != 1, right=choice != 0)
    setup = validate(
        ProblemSetup(
            sg=sg,
            tg=tg,
            phys=PhysicalParams(),
            weights=weights,
            omega_c=omega_c,
            omega_o=omega_o,
            bmask=bmask,
            bkind=kind,
            u0=rng.uniform(0.0, 2.0, J),
            v0=rng.uniform(0.0, 2.0, J),
            u_d=rng.uniform(0.0, 2.0, (N, J)),
        )
    )
    if away_from_kinks:
        f = rng.choice([-1.0, 1.0], (N, J)) * rng.uniform(0.1, 1.0, (N, J))
        g = rng.choice([-1.0, 1.0], (N, 2)) * rng.uniform(0.1, 1.0, (N, 2))
    else:
        f = rng.uniform(-1.0, 1.0, (N, J))
        g = rng.uniform(-1.0, 1.0, (N, 2))
    if kind is BoundaryControlKind.ROBIN:
        g = np.abs(g)
    return setup, ControlPair.on_masks(f, g, setup)


def check_forward_invariants(
    n_instances: int = 100, seed: int = 20260501
) -> list[CheckResult]:
    """Mass conservation, positivity, and chemical balance over random runs."""
    rng = np.random.default_rng(seed)
    max_drift = 0.0
    min_value = np.inf
    max_balance = 0.0
    for i in range(n_instances):
        kind = _KINDS[i % 3]
        setup, controls = random_instance(rng, kind)
        traj = solve_forward(setup, controls)
        totals = cell_totals(traj, setup)
        drift = float(np.max(np.abs(totals - totals[0])) / totals[0])
        max_drift = max(max_drift, drift)
        min_value = min(min_value, float(traj.u.min()), float(traj.v.min()))
        max_balance = max(
            max_balance,
            float(chemical_balance_residuals(traj, controls, setup).max()),
        )
    return [
        CheckResult(
            "mass conservation",
            max_drift <= 1e-12,
            f"max relative drift {max_drift:.3e} (bound 1e-12)",
        ),
        CheckResult(
            "positivity",
            min_value >= -1e-13,
            f"min state value {min_value:.3e} (bound -1e-13)",
        ),
        CheckResult(
            "chemical balance",
            max_balance <= 1e-10,
            f"max scaled residual {max_balance:.3e} (bound 1e-10)",
        ),
    ]


def check_duality(
    n_directions: int = 20, seed: int = 20260502, J: int = 16, N: int = 10
) -> CheckResult:
    """Tangent directional derivatives must match the adjoint gradient pairing."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_directions):
        kind = (BoundaryControlKind.ROBIN, BoundaryControlKind.BILINEAR)[i % 2]
        weights = CostWeights(alpha_f=float(i % 2), alpha_g=float((i // 2) % 2))
        setup, controls = random_instance(rng, kind, J=J, N=N, weights=weights)
        states = solve_forward(setup, controls)
        adjoints = solve_backward(setup, controls, states)
        grad = assemble_gradient(states, adjoints, controls, setup)
        direction = ControlPair.on_masks(
            rng.uniform(-1.0, 1.0, (N, J)), rng.uniform(-1.0, 1.0, (N, 2)), setup
        )
        via_sens = directional_derivative_via_sensitivity(
            setup, controls, states, direction
        )
        via_grad = setup.tg.dt * setup.sg.dx * float(
            np.sum(grad.wrt_f * direction.f)
        ) + setup.tg.dt * float(np.sum(grad.wrt_g * direction.g))
        denom = max(abs(via_sens), abs(via_grad), 1e-300)
        worst = max(worst, abs(via_sens - via_grad) / denom)
    return CheckResult(
        "sensitivity-adjoint duality",
        worst <= 1e-10,
        f"max relative mismatch {worst:.3e} (bound 1e-10)",
    )


def check_gradient_vs_fd(
    n_instances: int = 8,
    seed: int = 20260503,
    J: int = 20,
    N: int = 20,
    hs: tuple[float, ...] = (1e-3, 1e-4, 1e-5),
) -> CheckResult:
    """Adjoint gradient against central differences with an h-refinement sweep.

    Requires relative error <= 1e-5 at h = 1e-5 and, when the h = 1e-3 error
    sits above the rounding floor, a near-quadratic decay across the sweep.
    """
    rng = np.random.default_rng(seed)
    worst_final = 0.0
    decay_ok = True
    decay_note = ""
    for i in range(n_instances):
        kind = (BoundaryControlKind.ROBIN, BoundaryControlKind.BILINEAR)[i % 2]
        weights = CostWeights(alpha_f=float((i // 2) % 2), alpha_g=float((i // 4) % 2))
        setup, controls = random_instance(
            rng, kind, J=J, N=N, weights=weights, away_from_kinks=True
        )
        states = solve_forward(setup, controls)
        adjoints = solve_backward(setup, controls, states)
        grad = assemble_gradient(states, adjoints, controls, setup)
        direction = ControlPair.on_masks(
            rng.uniform(-1.0, 1.0, (N, J)), rng.uniform(-1.0, 1.0, (N, 2)), setup
        )
        exact = setup.tg.dt * setup.sg.dx * float(
            np.sum(grad.wrt_f * direction.f)
        ) + setup.tg.dt * float(np.sum(grad.wrt_g * direction.g))
        errs = []
        for h in hs:
            fd = fd_directional_derivative(setup, controls, direction, h)
            errs.append(abs(fd - exact) / max(abs(exact), 1e-300))
        worst_final = max(worst_final, errs[-1])
        if errs[0] > 1e-9:
            # expect roughly quadratic decay per decade of h
            if not (errs[1] < 0.05 * errs[0]):
                decay_ok = False
                decay_note = f" (instance {i}: errors {errs})"
    passed = worst_final <= 1e-5 and decay_ok
    return CheckResult(
        "gradient vs finite differences",
        passed,
        f"max relative error at h=1e-5: {worst_final:.3e} (bound 1e-5); "
        f"quadratic decay {'ok' if decay_ok else 'violated' + decay_note}",
    )


def check_gradient_support(seed: int = 20260504) -> CheckResult:
    """The assembled gradient must vanish off the control masks."""
    rng = np.random.default_rng(seed)
    ok = True
    for kind in (BoundaryControlKind.NONE, BoundaryControlKind.BILINEAR):
        setup, controls = random_instance(rng, kind, J=24, N=12)
        states = solve_forward(setup, controls)
        adjoints = solve_backward(setup, controls, states)
        grad = assemble_gradient(states, adjoints, controls, setup)
        off_c = ~setup.omega_c.member
        if np.any(grad.wrt_f[:, off_c] != 0.0):
            ok = False
        gmask = np.array([setup.bmask.left, setup.bmask.right])
        if kind is BoundaryControlKind.NONE:
            gmask[:] = False
        if np.any(grad.wrt_g[:, ~gmask] != 0.0):
            ok = False
    return CheckResult("gradient mask support", ok, "gradient vanishes off the masks")


def run_all(fast: bool = False) -> list[CheckResult]:
    """The full verification battery; ``fast`` trims the instance counts."""
    n_fwd = 30 if fast else 100
    n_dir = 8 if fast else 20
    n_fd = 4 if fast else 8
    results = check_forward_invariants(n_instances=n_fwd)
    results.append(check_duality(n_directions=n_dir))
    results.append(check_gradient_vs_fd(n_instances=n_fd))
    results.append(check_gradient_support())
    return results
