"""Uncontrolled chemotaxis dynamics on the reference grid.

Solves the state system with zero controls from the bump initial data and
prints the structural guarantees of the scheme: positivity of both fields,
exact conservation of the total cell mass, and the per-step balance law
for the total amount of chemical.
"""

import numpy as np

from kscontrol import ControlPair, solve_forward
from kscontrol.experiment_runner import ExperimentSpec, build_setup
from kscontrol.state_solver import cell_totals, chemical_balance_residuals

setup, _ = build_setup(ExperimentSpec.from_mapping({}))
controls = ControlPair.zeros(setup)
traj = solve_forward(setup, controls)

totals = cell_totals(traj, setup)
print(f"grid: {setup.sg.J} cells, {setup.tg.N} steps (dx={setup.sg.dx}, dt={setup.tg.dt})")
print(f"u range over the run: [{traj.u.min():.6f}, {traj.u.max():.6f}]")
print(f"v range over the run: [{traj.v.min():.6f}, {traj.v.max():.6f}]")
print(f"cell mass drift:      {np.abs(totals - totals[0]).max() / totals[0]:.3e}")
print(f"chemical balance:     {chemical_balance_residuals(traj, controls, setup).max():.3e}")
print()
print("final-time density profile (coarsened):")
coarse = traj.u[-1].reshape(20, 5).mean(axis=1)
for x, val in zip(setup.sg.cell_centers[2::5], coarse):
    print(f"  x={x:+.2f}  u={val:.3f} " + "#" * int(20 * val / coarse.max()))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    for ax, field, name in zip(axes, (traj.u, traj.v), ("u", "v")):
        mesh = ax.pcolormesh(
            setup.sg.cell_centers,
            setup.tg.dt * np.arange(setup.tg.N + 1),
            field,
            shading="nearest",
        )
        fig.colorbar(mesh, ax=ax)
        ax.set_xlabel("x")
        ax.set_title(name)
    axes[0].set_ylabel("t")
    fig.tight_layout()
    fig.savefig("uncontrolled_dynamics.png", dpi=130)
    print("\nwrote uncontrolled_dynamics.png")
except ImportError:
    pass
