"""Experiment presets, configuration files, and on-disk run artifacts.

Configuration is a flat ``key = value`` text file (a TOML-compatible
subset); unknown keys are rejected so a config always means what it says.
Defaults: a 100-cell grid on (-1, 1), 100 steps on [0, 0.05],
Du = Dv = 0.1, chi = mu = 1, lam = 0.1, no regularization, and Adam with
step 0.1, tolerance 1e-4, and at most 1e5 iterations.

Presets
-------
``manufactured``      recover a known space-time control from its own state
``bdc_case0``         uncontrolled dynamics (forward solve only)
``bdc_case1..5``      distributed bilinear control with the five
                      control/observation interval layouts
``bbc_full/bbc_half`` bilinear boundary control, observing all / the center
``rbc_full/rbc_half`` Robin boundary control, observing all / the center

Artifacts are CSV files with 17-significant-digit reals (lossless float64
round trip) plus a deterministic ``metadata.json``; wall-clock timings go
to a separate ``timing.json`` so that rerunning a preset reproduces every
CSV byte for byte.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from . import __version__
from .adam_optimizer import AdamConfig, OptimizationTrace, optimize
from .adjoint_solver import AdjointTrajectory, solve_backward
from .cost_gradient import perturbation_scan
from .discretization import BoundaryMask, RegionMask, build_grids, cell_averages, interval_to_mask
from .errors import ValidationError
from .problem import (
    BoundaryControlKind,
    ControlPair,
    CostWeights,
    PhysicalParams,
    ProblemSetup,
    validate,
    with_target,
)
from .state_solver import StateTrajectory, solve_forward

__all__ = [
    "ExperimentSpec",
    "RunArtifacts",
    "DEFAULTS",
    "PRESETS",
    "load_config",
    "run_preset",
    "run_experiment",
    "write_outputs",
    "build_setup",
    "constant_direction",
    "write_field_csv",
    "read_field_csv",
    "scan_run_directory",
]

# Every config key appears here with its default and type.
DEFAULTS: dict[str, Any] = {
    "preset": "",
    "L": 1.0,
    "J": 100,
    "T": 0.05,
    "N": 100,
    "Du": 0.1,
    "chi": 1.0,
    "Dv": 0.1,
    "lambda": 0.1,
    "mu": 1.0,
    "sigma": 1.0,
    "alpha_f": 0.0,
    "alpha_g": 0.0,
    "control_lo": -1.0,
    "control_hi": 1.0,
    "observe_lo": -1.0,
    "observe_hi": 1.0,
    "distributed_control": True,
    "boundary_kind": "none",
    "boundary_left": True,
    "boundary_right": True,
    "u0": "one_plus_cos",
    "v0": "three_plus_cos",
    "target": "constant:1",
    "adam_alpha": 0.1,
    "adam_beta1": 0.9,
    "adam_beta2": 0.999,
    "adam_eps": 1e-8,
    "tol": 1e-4,
    "max_iter": 100_000,
    "optimize": True,
    "scan_amplitudes": "-0.1,-0.05,-0.02,-0.01,0.01,0.02,0.05,0.1",
    "out_dir": "",
}

PRESETS: dict[str, dict[str, Any]] = {
    "manufactured": {"target": "manufactured"},
    "bdc_case0": {"optimize": False},
    "bdc_case1": {},
    "bdc_case2": {"control_lo": -0.5, "control_hi": 0.5},
    "bdc_case3": {"observe_lo": -0.5, "observe_hi": 0.5},
    "bdc_case4": {
        "control_lo": -1.0,
        "control_hi": 0.2,
        "observe_lo": -0.2,
        "observe_hi": 1.0,
    },
    "bdc_case5": {
        "control_lo": -1.0,
        "control_hi": -0.2,
        "observe_lo": 0.2,
        "observe_hi": 1.0,
    },
    "bbc_full": {
        "boundary_kind": "bilinear",
        "distributed_control": False,
        "u0": "one_minus_cos",
        "v0": "one_minus_cos",
    },
    "bbc_half": {
        "boundary_kind": "bilinear",
        "distributed_control": False,
        "u0": "one_minus_cos",
        "v0": "one_minus_cos",
        "observe_lo": -0.5,
        "observe_hi": 0.5,
    },
    "rbc_full": {
        "boundary_kind": "robin",
        "distributed_control": False,
        "u0": "one_minus_cos",
        "v0": "one_minus_cos",
    },
    "rbc_half": {
        "boundary_kind": "robin",
        "distributed_control": False,
        "u0": "one_minus_cos",
        "v0": "one_minus_cos",
        "observe_lo": -0.5,
        "observe_hi": 0.5,
    },
}

_KEY_TO_ATTR = {"lambda": "lam"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved experiment description (one attribute per config key)."""

    preset: str
    L: float
    J: int
    T: float
    N: int
    Du: float
    chi: float
    Dv: float
    lam: float
    mu: float
    sigma: float
    alpha_f: float
    alpha_g: float
    control_lo: float
    control_hi: float
    observe_lo: float
    observe_hi: float
    distributed_control: bool
    boundary_kind: str
    boundary_left: bool
    boundary_right: bool
    u0: str
    v0: str
    target: str
    adam_alpha: float
    adam_beta1: float
    adam_beta2: float
    adam_eps: float
    tol: float
    max_iter: int
    optimize: bool
    scan_amplitudes: str
    out_dir: str

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "ExperimentSpec":
        merged = dict(DEFAULTS)
        for key, value in mapping.items():
            if key not in DEFAULTS:
                raise ValidationError(f"unknown configuration key {key!r}")
            merged[key] = _coerce(key, value)
        return cls(**{_KEY_TO_ATTR.get(k, k): v for k, v in merged.items()})

    def to_mapping(self) -> dict[str, Any]:
        return {
            _ATTR_TO_KEY.get(f.name, f.name): getattr(self, f.name)
            for f in fields(self)
        }

    def amplitudes(self) -> list[float]:
        vals = {0.0}
        for tok in self.scan_amplitudes.split(","):
            tok = tok.strip()
            if tok:
                vals.add(float(tok))
        return sorted(vals)


def _coerce(key: str, value: Any) -> Any:
    """Check/convert a raw config value against the default's type."""
    default = DEFAULTS[key]
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false"):
            return value.lower() == "true"
        raise ValidationError(f"key {key!r} expects a boolean, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, bool):
            raise ValidationError(f"key {key!r} expects an integer, got {value!r}")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value == int(value):
            return int(value)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                pass
        raise ValidationError(f"key {key!r} expects an integer, got {value!r}")
    if isinstance(default, float):
        if isinstance(value, bool):
            raise ValidationError(f"key {key!r} expects a number, got {value!r}")
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        raise ValidationError(f"key {key!r} expects a number, got {value!r}")
    if not isinstance(value, str):
        raise ValidationError(f"key {key!r} expects a string, got {value!r}")
    return value


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse config text and reject unknown or non-flat keys."""
    try:
        raw = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ValidationError(f"config parse error: {exc}") from exc
    flat: dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            raise ValidationError(f"config must be flat; found a table {key!r}")
        if key not in DEFAULTS:
            raise ValidationError(f"unknown configuration key {key!r}")
        flat[key] = _coerce(key, value)
    return flat


def load_config(path: str | Path) -> ExperimentSpec:
    """Read a config file into a fully populated spec.

    Defaults fill omitted keys; a ``preset`` key applies that preset's
    values underneath the file's explicit settings.
    """
    path = Path(path)
    overrides = parse_config_text(path.read_text())
    mapping: dict[str, Any] = {}
    preset = overrides.get("preset", "")
    if preset:
        if preset not in PRESETS:
            raise ValidationError(f"unknown preset {preset!r}")
        mapping.update(PRESETS[preset])
    mapping.update(overrides)
    return ExperimentSpec.from_mapping(mapping)


_PROFILES: dict[str, Callable[[float], float]] = {
    "one_plus_cos": lambda x: 1.0 + math.cos(math.pi * x),
    "three_plus_cos": lambda x: 3.0 + math.cos(math.pi * x),
    "one_minus_cos": lambda x: 1.0 - math.cos(math.pi * x),
}


def _initial_profile(selector: str, grid) -> np.ndarray:
    if selector in _PROFILES:
        return cell_averages(_PROFILES[selector], grid)
    if selector.startswith("constant:"):
        return np.full(grid.J, float(selector.split(":", 1)[1]))
    if selector.startswith("file:"):
        values = np.loadtxt(selector.split(":", 1)[1], dtype=np.float64)
        if values.shape != (grid.J,):
            raise ValidationError(
                f"profile file must hold {grid.J} values, got shape {values.shape}"
            )
        return values
    raise ValidationError(f"unknown initial-condition selector {selector!r}")


def manufactured_control(sg, tg) -> np.ndarray:
    """The reference space-time control cos(3 pi x) cos(20 pi t), sampled at
    cell centers and time-slab midpoints."""
    t_mid = (np.arange(1, tg.N + 1) - 0.5) * tg.dt
    return np.cos(3.0 * np.pi * sg.cell_centers)[None, :] * np.cos(
        20.0 * np.pi * t_mid
    )[:, None]


def build_setup(spec: ExperimentSpec) -> tuple[ProblemSetup, AdamConfig]:
    """Resolve a spec into a validated problem and optimizer configuration."""
    sg, tg = build_grids(spec.L, spec.J, spec.T, spec.N)
    omega_c = (
        interval_to_mask(spec.control_lo, spec.control_hi, sg)
        if spec.distributed_control
        else RegionMask.empty(sg)
    )
    omega_o = interval_to_mask(spec.observe_lo, spec.observe_hi, sg)
    try:
        bkind = BoundaryControlKind(spec.boundary_kind)
    except ValueError:
        raise ValidationError(
            f"boundary_kind must be one of none/robin/bilinear, got {spec.boundary_kind!r}"
        ) from None
    bmask = (
        BoundaryMask(spec.boundary_left, spec.boundary_right)
        if bkind is not BoundaryControlKind.NONE
        else BoundaryMask(False, False)
    )
    setup = ProblemSetup(
        sg=sg,
        tg=tg,
        phys=PhysicalParams(
            Du=spec.Du, chi=spec.chi, Dv=spec.Dv, lam=spec.lam, mu=spec.mu, sigma=spec.sigma
        ),
        weights=CostWeights(alpha_f=spec.alpha_f, alpha_g=spec.alpha_g),
        omega_c=omega_c,
        omega_o=omega_o,
        bmask=bmask,
        bkind=bkind,
        u0=_initial_profile(spec.u0, sg),
        v0=_initial_profile(spec.v0, sg),
        u_d=np.zeros((tg.N, sg.J)),
    )
    if spec.target.startswith("constant:"):
        u_d = np.full((tg.N, sg.J), float(spec.target.split(":", 1)[1]))
    elif spec.target == "manufactured":
        reference = ControlPair.on_masks(
            manufactured_control(sg, tg), np.zeros((tg.N, 2)), setup
        )
        u_d = solve_forward(setup, reference).u[1:]
    elif spec.target.startswith("file:"):
        _, _, u_d = read_field_csv(Path(spec.target.split(":", 1)[1]))
        if u_d.shape != (tg.N, sg.J):
            raise ValidationError(
                f"target file must hold an ({tg.N}, {sg.J}) field, got {u_d.shape}"
            )
    else:
        raise ValidationError(f"unknown target selector {spec.target!r}")
    setup = validate(with_target(setup, u_d))
    cfg = AdamConfig(
        alpha=spec.adam_alpha,
        beta1=spec.adam_beta1,
        beta2=spec.adam_beta2,
        eps=spec.adam_eps,
        tol=spec.tol,
        max_iter=spec.max_iter,
    )
    return setup, cfg


def constant_direction(setup: ProblemSetup) -> ControlPair:
    """All-ones direction on the active control supports."""
    return ControlPair.on_masks(
        np.ones((setup.tg.N, setup.sg.J)), np.ones((setup.tg.N, 2)), setup
    )


@dataclass(frozen=True)
class RunArtifacts:
    """Paths written by a run; unset entries were not applicable."""

    out_dir: Path
    metadata: Path
    state_u: Path
    state_v: Path
    adjoint_phi: Path | None = None
    adjoint_psi: Path | None = None
    control_f: Path | None = None
    control_g: Path | None = None
    trace: Path | None = None
    perturbation: Path | None = None
    timing: Path | None = None

    def paths(self) -> list[Path]:
        out = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, Path) and f.name != "out_dir":
                out.append(val)
        return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field_csv(
    path: Path, times: np.ndarray, centers: np.ndarray, values: np.ndarray
) -> None:
    """Space-time field as CSV: header ``t,<centers>``, one row per slice.

    Reals carry 17 significant digits, which round-trips float64 exactly.
    """
    header = "t," + ",".join(_fmt(c) for c in centers)
    data = np.column_stack([np.asarray(times, dtype=np.float64), values])
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header=header, comments="")


def read_field_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_field_csv`: (times, centers, values)."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
    cols = header.split(",")
    if not cols or cols[0] != "t":
        raise ValidationError(f"{path} is not a space-time field CSV")
    centers = np.array([float(tok) for tok in cols[1:]])
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], centers, data[:, 1:]


def _step_times(tg) -> np.ndarray:
    return tg.dt * np.arange(1, tg.N + 1, dtype=np.float64)


def _state_times(tg) -> np.ndarray:
    return tg.dt * np.arange(0, tg.N + 1, dtype=np.float64)


def write_outputs(
    out_dir: Path,
    spec: ExperimentSpec,
    setup: ProblemSetup,
    states: StateTrajectory,
    adjoints: AdjointTrajectory | None = None,
    controls: ControlPair | None = None,
    trace: OptimizationTrace | None = None,
    scan: list[tuple[float, float]] | None = None,
) -> RunArtifacts:
    """Write every artifact of a run into ``out_dir`` (created if needed)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    centers = setup.sg.cell_centers
    tg = setup.tg

    state_u = out_dir / "state_u.csv"
    state_v = out_dir / "state_v.csv"
    write_field_csv(state_u, _state_times(tg), centers, states.u)
    write_field_csv(state_v, _state_times(tg), centers, states.v)

    adjoint_phi = adjoint_psi = control_f = control_g = trace_path = None
    perturbation = timing = None

    if adjoints is not None:
        adjoint_phi = out_dir / "adjoint_phi.csv"
        adjoint_psi = out_dir / "adjoint_psi.csv"
        # rows n = 1..N; the terminal zero slice is a boundary condition,
        # not data, and is omitted
        write_field_csv(adjoint_phi, _step_times(tg), centers, adjoints.phi[:-1])
        write_field_csv(adjoint_psi, _step_times(tg), centers, adjoints.psi[:-1])

    if controls is not None:
        control_f = out_dir / "control_f.csv"
        write_field_csv(control_f, _step_times(tg), centers, controls.f)
        if setup.bkind is not BoundaryControlKind.NONE:
            control_g = out_dir / "control_g.csv"
            data = np.column_stack([_step_times(tg), controls.g])
            np.savetxt(
                control_g,
                data,
                delimiter=",",
                fmt="%.17g",
                header="t,left,right",
                comments="",
            )

    if trace is not None:
        trace_path = out_dir / "trace.csv"
        iters = np.arange(1, trace.iterations + 1)
        data = np.column_stack(
            [iters, trace.cost, trace.grad_norm_l2, trace.grad_norm_max, trace.grad_norm_frob]
        )
        np.savetxt(
            trace_path,
            data,
            delimiter=",",
            fmt=["%d", "%.17g", "%.17g", "%.17g", "%.17g"],
            header="iter,cost,grad_norm_l2,grad_norm_max,grad_norm_frob",
            comments="",
        )
        timing = out_dir / "timing.json"
        timing.write_text(
            json.dumps(
                {
                    "total_wall_s": float(trace.wall_ms.sum() / 1e3),
                    "mean_iteration_ms": float(trace.wall_ms.mean()),
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )

    if scan is not None:
        perturbation = out_dir / "perturbation.csv"
        data = np.asarray(scan, dtype=np.float64)
        np.savetxt(
            perturbation,
            data,
            delimiter=",",
            fmt="%.17g",
            header="amplitude,cost",
            comments="",
        )

    meta: dict[str, Any] = {
        "spec": spec.to_mapping(),
        "version": __version__,
        "grid": {"dx": setup.sg.dx, "dt": tg.dt},
    }
    if trace is not None:
        meta["result"] = {
            "termination": trace.termination,
            "iterations": trace.iterations,
            "best_iter": trace.best_iter,
            "initial_cost": float(trace.cost[0]),
            "final_cost": float(trace.cost[-1]),
            "best_cost": float(trace.cost[trace.best_iter - 1]),
            "final_grad_norm_l2": float(trace.grad_norm_l2[-1]),
            "final_grad_norm_max": float(trace.grad_norm_max[-1]),
            "final_grad_norm_frob": float(trace.grad_norm_frob[-1]),
        }
    metadata = out_dir / "metadata.json"
    metadata.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    return RunArtifacts(
        out_dir=out_dir,
        metadata=metadata,
        state_u=state_u,
        state_v=state_v,
        adjoint_phi=adjoint_phi,
        adjoint_psi=adjoint_psi,
        control_f=control_f,
        control_g=control_g,
        trace=trace_path,
        perturbation=perturbation,
        timing=timing,
    )


def run_experiment(spec: ExperimentSpec, log: Callable[[str], None] | None = None) -> RunArtifacts:
    """Execute a resolved spec end to end and write its artifacts."""
    say = log or (lambda msg: None)
    setup, cfg = build_setup(spec)
    out_dir = Path(spec.out_dir) if spec.out_dir else Path("runs") / (spec.preset or "custom")
    if not spec.optimize:
        say("forward solve (no optimization)")
        controls = ControlPair.zeros(setup)
        states = solve_forward(setup, controls)
        return write_outputs(out_dir, spec, setup, states)
    say(f"optimizing (max {cfg.max_iter} iterations, tol {cfg.tol:g})")
    t0 = time.perf_counter()
    best, trace = optimize(setup, cfg, ControlPair.zeros(setup))
    say(
        f"done: {trace.termination} after {trace.iterations} iterations "
        f"in {time.perf_counter() - t0:.1f}s; final cost {trace.cost[-1]:.6g}"
    )
    states = solve_forward(setup, best)
    adjoints = solve_backward(setup, best, states)
    scan = perturbation_scan(setup, best, constant_direction(setup), spec.amplitudes())
    return write_outputs(
        out_dir, spec, setup, states, adjoints=adjoints, controls=best, trace=trace, scan=scan
    )


def run_preset(
    name: str,
    overrides: Mapping[str, Any] | None = None,
    log: Callable[[str], None] | None = None,
) -> RunArtifacts:
    """Run a named preset with optional key overrides on top."""
    if name not in PRESETS:
        raise ValidationError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        )
    mapping: dict[str, Any] = dict(PRESETS[name])
    mapping["preset"] = name
    if overrides:
        for key, value in overrides.items():
            if key not in DEFAULTS:
                raise ValidationError(f"unknown configuration key {key!r}")
            mapping[key] = _coerce(key, value)
    return run_experiment(ExperimentSpec.from_mapping(mapping), log=log)


def scan_run_directory(
    run_dir: str | Path, amplitudes: list[float], direction: str = "constant"
) -> tuple[Path, list[tuple[float, float]]]:
    """Perturbation scan around the controls stored in a finished run.

    Rebuilds the problem from the run's metadata, loads the control CSVs,
    evaluates the reduced cost along the requested direction, and writes
    ``scan.csv`` into the run directory.
    """
    if direction != "constant":
        raise ValidationError(f"unsupported scan direction {direction!r}")
    run_dir = Path(run_dir)
    meta_path = run_dir / "metadata.json"
    if not meta_path.exists():
        raise ValidationError(f"{run_dir} has no metadata.json")
    meta = json.loads(meta_path.read_text())
    spec = ExperimentSpec.from_mapping(meta["spec"])
    setup, _ = build_setup(spec)
    f_path = run_dir / "control_f.csv"
    if not f_path.exists():
        raise ValidationError(f"{run_dir} holds no controls (was it an optimized run?)")
    _, _, f = read_field_csv(f_path)
    g_path = run_dir / "control_g.csv"
    if g_path.exists():
        g = np.loadtxt(g_path, delimiter=",", skiprows=1, ndmin=2)[:, 1:]
    else:
        g = np.zeros((setup.tg.N, 2))
    controls = ControlPair.on_masks(f, g, setup)
    scan = perturbation_scan(setup, controls, constant_direction(setup), amplitudes)
    out = run_dir / "scan.csv"
    np.savetxt(
        out,
        np.asarray(scan, dtype=np.float64),
        delimiter=",",
        fmt="%.17g",
        header="amplitude,cost",
        comments="",
    )
    return out, scan
