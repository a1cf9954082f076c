"""Three routes to the same directional derivative of the reduced cost.

The adjoint-assembled gradient, the tangent (sensitivity) solver, and
central finite differences of the reduced cost must agree: the first two
to machine precision (they are exact transposes of each other), the third
to O(h^2).
"""

import numpy as np

from kscontrol import (
    ControlPair,
    assemble_gradient,
    fd_directional_derivative,
    directional_derivative_via_sensitivity,
    solve_backward,
    solve_forward,
)
from kscontrol.experiment_runner import ExperimentSpec, build_setup

setup, _ = build_setup(ExperimentSpec.from_mapping({"J": 24, "N": 16, "alpha_f": 1.0}))

rng = np.random.default_rng(7)
# control entries bounded away from the positive/negative-part kinks
f = rng.choice([-1.0, 1.0], (16, 24)) * rng.uniform(0.2, 1.0, (16, 24))
controls = ControlPair.on_masks(f, np.zeros((16, 2)), setup)
direction = ControlPair.on_masks(rng.uniform(-1, 1, (16, 24)), np.zeros((16, 2)), setup)

states = solve_forward(setup, controls)
adjoints = solve_backward(setup, controls, states)
grad = assemble_gradient(states, adjoints, controls, setup)

via_adjoint = setup.tg.dt * setup.sg.dx * float(np.sum(grad.wrt_f * direction.f))
via_tangent = directional_derivative_via_sensitivity(setup, controls, states, direction)
print(f"adjoint pairing:     {via_adjoint:+.15e}")
print(f"tangent solve:       {via_tangent:+.15e}")
print(f"  relative mismatch: {abs(via_adjoint - via_tangent) / abs(via_adjoint):.2e}")
print()
print("central differences of the reduced cost:")
for h in (1e-2, 1e-3, 1e-4):
    fd = fd_directional_derivative(setup, controls, direction, h)
    print(f"  h={h:.0e}: {fd:+.12e}  (rel. err {abs(fd - via_adjoint) / abs(via_adjoint):.2e})")
