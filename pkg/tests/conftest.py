import numpy as np
import pytest

from kscontrol import (
    BoundaryControlKind,
    BoundaryMask,
    ControlPair,
    CostWeights,
    PhysicalParams,
    ProblemSetup,
    RegionMask,
    build_grids,
    cell_averages,
    interval_to_mask,
    validate,
)


def make_setup(
    J=20,
    N=20,
    L=1.0,
    T=0.05,
    phys=None,
    weights=None,
    control=(-1.0, 1.0),
    observe=(-1.0, 1.0),
    bkind=BoundaryControlKind.NONE,
    bmask=None,
    u0=None,
    v0=None,
    u_d=None,
):
    """Small validated problem with sensible defaults for unit tests."""
    sg, tg = build_grids(L, J, T, N)
    phys = phys or PhysicalParams()
    weights = weights or CostWeights()
    omega_c = (
        interval_to_mask(*control, sg) if control is not None else RegionMask.empty(sg)
    )
    omega_o = interval_to_mask(*observe, sg)
    if bmask is None:
        bmask = (
            BoundaryMask(True, True)
            if bkind is not BoundaryControlKind.NONE
            else BoundaryMask(False, False)
        )
    if u0 is None:
        u0 = cell_averages(lambda x: 1.0 + np.cos(np.pi * x), sg)
    if v0 is None:
        v0 = cell_averages(lambda x: 3.0 + np.cos(np.pi * x), sg)
    if u_d is None:
        u_d = np.ones((tg.N, sg.J))
    return validate(
        ProblemSetup(
            sg=sg,
            tg=tg,
            phys=phys,
            weights=weights,
            omega_c=omega_c,
            omega_o=omega_o,
            bmask=bmask,
            bkind=bkind,
            u0=np.asarray(u0, dtype=float),
            v0=np.asarray(v0, dtype=float),
            u_d=u_d,
        )
    )


def random_controls(setup, rng, lo=-1.0, hi=1.0, nonneg_g=False):
    N, J = setup.tg.N, setup.sg.J
    f = rng.uniform(lo, hi, (N, J))
    g = rng.uniform(lo, hi, (N, 2))
    if nonneg_g:
        g = np.abs(g)
    return ControlPair.on_masks(f, g, setup)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
