"""Render a run directory's CSV artifacts into figures.

Consumes only the documented on-disk interface of a run directory
(``metadata.json`` plus the CSV files); it never imports the solver
package and never modifies run data.  Images land in a ``figures``
subdirectory of the run (or an explicit output directory).

Figure kinds
------------
heatmap_u, heatmap_v  space-time heatmaps of the states (t vertical)
heatmap_f             space-time heatmap of the distributed control
boundary_g            the two boundary-control signals over time
cost_curve            cost per iteration, log scale
grad_curve            gradient norms per iteration, log scale
perturbation          cost along the constant direction scan
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

ALL_KINDS = (
    "heatmap_u",
    "heatmap_v",
    "heatmap_f",
    "boundary_g",
    "cost_curve",
    "grad_curve",
    "perturbation",
)

_KIND_INPUT = {
    "heatmap_u": "state_u.csv",
    "heatmap_v": "state_v.csv",
    "heatmap_f": "control_f.csv",
    "boundary_g": "control_g.csv",
    "cost_curve": "trace.csv",
    "grad_curve": "trace.csv",
    "perturbation": "perturbation.csv",
}


class RenderError(RuntimeError):
    """A missing input or an invalid request."""


@dataclass(frozen=True)
class FigureRequest:
    """What to render from which run directory."""

    run_dir: Path
    kinds: tuple[str, ...] | None = None  # None: every kind whose input exists
    fmt: str = "png"
    out_dir: Path | None = field(default=None)

    def __post_init__(self) -> None:
        if self.fmt not in ("png", "svg"):
            raise RenderError(f"unsupported format {self.fmt!r} (png or svg)")
        if self.kinds is not None:
            unknown = [k for k in self.kinds if k not in ALL_KINDS]
            if unknown:
                raise RenderError(f"unknown figure kinds: {', '.join(unknown)}")


def _read_field(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    coords = np.array([float(tok) for tok in header[1:]])
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], coords, data[:, 1:]


def _save(fig, path: Path, description: str) -> None:
    fig.savefig(path, dpi=150, metadata={"Description": description})
    plt.close(fig)


def _heatmap(path: Path, csv: Path, title: str) -> str:
    times, centers, values = _read_field(csv)
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    vmin, vmax = float(values.min()), float(values.max())
    mesh = ax.pcolormesh(centers, times, values, shading="nearest", vmin=vmin, vmax=vmax)
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title(title)
    fig.tight_layout()
    description = json.dumps({"vmin": vmin, "vmax": vmax, "source": csv.name})
    _save(fig, path, description)
    return description


def _boundary(path: Path, csv: Path) -> str:
    data = np.loadtxt(csv, delimiter=",", skiprows=1, ndmin=2)
    t, left, right = data[:, 0], data[:, 1], data[:, 2]
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    ax.plot(t, left, label="x = -L")
    ax.plot(t, right, label="x = +L", linestyle="--")
    ax.set_xlabel("t")
    ax.set_ylabel("g")
    ax.set_title("boundary control")
    ax.legend()
    fig.tight_layout()
    description = json.dumps({"source": csv.name})
    _save(fig, path, description)
    return description


def _curve(path: Path, csv: Path, which: str) -> str:
    data = np.loadtxt(csv, delimiter=",", skiprows=1, ndmin=2)
    iters = data[:, 0]
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    if which == "cost":
        ax.semilogy(iters, data[:, 1])
        ax.set_ylabel("cost")
        ax.set_title("cost per iteration")
    else:
        ax.semilogy(iters, data[:, 2], label="weighted L2")
        ax.semilogy(iters, data[:, 3], label="max", linestyle="--")
        if data.shape[1] > 4:
            ax.semilogy(iters, data[:, 4], label="euclidean", linestyle=":")
        ax.set_ylabel("gradient norm")
        ax.set_title("gradient norm per iteration")
        ax.legend()
    ax.set_xlabel("iteration")
    fig.tight_layout()
    description = json.dumps({"source": csv.name, "curve": which})
    _save(fig, path, description)
    return description


def _perturbation(path: Path, csv: Path) -> str:
    data = np.loadtxt(csv, delimiter=",", skiprows=1, ndmin=2)
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    ax.plot(data[:, 0], data[:, 1], marker="o")
    ax.set_xlabel("perturbation amplitude")
    ax.set_ylabel("cost")
    ax.set_title("cost along the constant direction")
    fig.tight_layout()
    description = json.dumps({"source": csv.name})
    _save(fig, path, description)
    return description


def render(request: FigureRequest) -> list[Path]:
    """Render the requested kinds; returns the written image paths.

    With ``kinds=None`` every kind whose input CSV exists is rendered; a
    kind requested explicitly whose input is missing raises
    :class:`RenderError` naming the file.
    """
    run_dir = Path(request.run_dir)
    if not (run_dir / "metadata.json").exists():
        raise RenderError(f"{run_dir} is not a run directory (no metadata.json)")
    if request.kinds is None:
        kinds = [k for k in ALL_KINDS if (run_dir / _KIND_INPUT[k]).exists()]
    else:
        kinds = list(request.kinds)
        for kind in kinds:
            if not (run_dir / _KIND_INPUT[kind]).exists():
                raise RenderError(
                    f"cannot render {kind}: missing input {_KIND_INPUT[kind]} in {run_dir}"
                )
    out_dir = Path(request.out_dir) if request.out_dir else run_dir / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for kind in kinds:
        target = out_dir / f"{kind}.{request.fmt}"
        csv = run_dir / _KIND_INPUT[kind]
        if kind == "heatmap_u":
            _heatmap(target, csv, "cell density u")
        elif kind == "heatmap_v":
            _heatmap(target, csv, "chemical concentration v")
        elif kind == "heatmap_f":
            _heatmap(target, csv, "distributed control f")
        elif kind == "boundary_g":
            _boundary(target, csv)
        elif kind == "cost_curve":
            _curve(target, csv, "cost")
        elif kind == "grad_curve":
            _curve(target, csv, "grad")
        elif kind == "perturbation":
            _perturbation(target, csv)
        written.append(target)
    return written
