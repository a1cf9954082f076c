"""Problem description: physics, cost weights, control placement, data.

A :class:`ProblemSetup` bundles everything a solver needs.  The governing
system on (-L, L) x (0, T) is

    u_t + d/dx(-Du u_x + chi u v_x)        = 0
    v_t - Dv v_xx + lam v - mu u           = f v 1_{control region}

with no-flux conditions for u and a chemical boundary flux P(v, g) on the
controlled endpoints:

    robin:     P = sigma (g - v)
    bilinear:  P = g v

The distributed control f multiplies v in the control region (injection
where f > 0, extraction where f < 0).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .discretization import BoundaryMask, RegionMask, SpatialGrid, TimeGrid
from .errors import ValidationError

__all__ = [
    "PhysicalParams",
    "CostWeights",
    "BoundaryControlKind",
    "ProblemSetup",
    "ControlPair",
    "validate",
]


class BoundaryControlKind(enum.Enum):
    NONE = "none"
    ROBIN = "robin"
    BILINEAR = "bilinear"


@dataclass(frozen=True)
class PhysicalParams:
    """Physical coefficients of the chemotaxis system.

    Du, Dv : diffusion coefficients of cells and chemical.
    chi    : chemotactic sensitivity.
    lam    : chemical degradation rate.
    mu     : chemical production rate.
    sigma  : boundary permeability (only used by Robin control).
    """

    Du: float = 0.1
    chi: float = 1.0
    Dv: float = 0.1
    lam: float = 0.1
    mu: float = 1.0
    sigma: float = 1.0


@dataclass(frozen=True)
class CostWeights:
    """Nonnegative weights of the two control regularization terms."""

    alpha_f: float = 0.0
    alpha_g: float = 0.0


def _frozen(a: np.ndarray, shape: tuple[int, ...], what: str) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.shape != shape:
        raise ValidationError(f"{what} must have shape {shape}, got {out.shape}")
    out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class ProblemSetup:
    """Validated bundle of grids, physics, cost data, and control placement.

    Immutable after construction; build one via module-level helpers and run
    it through :func:`validate` (the experiment runner does this for you).
    """

    sg: SpatialGrid
    tg: TimeGrid
    phys: PhysicalParams
    weights: CostWeights
    omega_c: RegionMask
    omega_o: RegionMask
    bmask: BoundaryMask
    bkind: BoundaryControlKind
    u0: np.ndarray = field(repr=False)
    v0: np.ndarray = field(repr=False)
    u_d: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "u0", _frozen(self.u0, (self.sg.J,), "u0"))
        object.__setattr__(self, "v0", _frozen(self.v0, (self.sg.J,), "v0"))
        object.__setattr__(
            self, "u_d", _frozen(self.u_d, (self.tg.N, self.sg.J), "target u_d")
        )


@dataclass(frozen=True, eq=False)
class ControlPair:
    """Distributed control f (N, J) and boundary control g (N, 2).

    Entries outside the control region / unmasked endpoints are zeroed at
    construction, so a ControlPair is always supported on the masks.
    """

    f: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)

    @classmethod
    def on_masks(cls, f: np.ndarray, g: np.ndarray, setup: ProblemSetup) -> "ControlPair":
        N, J = setup.tg.N, setup.sg.J
        f = _frozen(np.where(setup.omega_c.member[None, :], f, 0.0), (N, J), "control f")
        gmask = np.array([setup.bmask.left, setup.bmask.right], dtype=bool)
        if setup.bkind is BoundaryControlKind.NONE:
            gmask[:] = False
        g = _frozen(np.where(gmask[None, :], g, 0.0), (N, 2), "control g")
        return cls(f=f, g=g)

    @classmethod
    def zeros(cls, setup: ProblemSetup) -> "ControlPair":
        return cls.on_masks(
            np.zeros((setup.tg.N, setup.sg.J)), np.zeros((setup.tg.N, 2)), setup
        )


def validate(setup: ProblemSetup) -> ProblemSetup:
    """Check every type invariant and return the setup unchanged.

    Each violated invariant raises a distinct :class:`ValidationError`;
    the function is idempotent and has no side effects.
    """
    p, w = setup.phys, setup.weights
    if setup.omega_c.member.shape != (setup.sg.J,):
        raise ValidationError("control mask does not match the spatial grid")
    if setup.omega_o.member.shape != (setup.sg.J,):
        raise ValidationError("observation mask does not match the spatial grid")
    if not (p.Du > 0.0 and p.Dv > 0.0):
        raise ValidationError("diffusion coefficients must be positive")
    if p.lam < 0.0 or p.mu < 0.0:
        raise ValidationError("degradation and production rates must be nonnegative")
    if setup.bkind is BoundaryControlKind.ROBIN and not p.sigma > 0.0:
        raise ValidationError("permeability must be positive")
    if w.alpha_f < 0.0 or w.alpha_g < 0.0:
        raise ValidationError("cost weights must be nonnegative")
    if w.alpha_f > 0.0 and setup.omega_c.measure <= 0.0:
        raise ValidationError("distributed regularization requires a nonempty control region")
    if np.any(setup.u0 < 0.0):
        raise ValidationError("negative initial cell density")
    if np.any(setup.v0 < 0.0):
        raise ValidationError("negative initial chemical concentration")
    if not setup.omega_o.measure > 0.0:
        raise ValidationError("empty observation region")
    if setup.bkind is not BoundaryControlKind.NONE and setup.bmask.count < 1:
        raise ValidationError("boundary control requires at least one masked endpoint")
    if not np.isfinite(setup.u_d[:, setup.omega_o.member]).all():
        raise ValidationError("target contains non-finite values on the observation region")
    return setup


def with_target(setup: ProblemSetup, u_d: np.ndarray) -> ProblemSetup:
    """Return a copy of the setup with a replaced target trajectory."""
    return replace(setup, u_d=u_d)
