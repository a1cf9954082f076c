"""Steering the cell density to a flat target with a distributed control.

A reduced-resolution version of the whole-domain control study: the
bilinear control injects/removes chemical, chemotaxis pulls the cells,
and Adam drives the tracking cost down.  Full-resolution studies are
available through the command line, e.g.

    kscontrol run --preset bdc_case1 --out runs/case1
"""

import numpy as np

from kscontrol import AdamConfig, ControlPair, optimize
from kscontrol.experiment_runner import ExperimentSpec, build_setup

spec = ExperimentSpec.from_mapping({"preset": "demo", "J": 50, "N": 50})
setup, _ = build_setup(spec)
cfg = AdamConfig(max_iter=2000)

best, trace = optimize(setup, cfg, ControlPair.zeros(setup))
print(f"termination: {trace.termination} after {trace.iterations} iterations")
print(f"cost: {trace.cost[0]:.5f} -> {trace.cost[-1]:.5f} "
      f"({100 * trace.cost[-1] / trace.cost[0]:.1f}% of initial)")
print(f"best iterate: {trace.best_iter}")
print()
print("cost decay:")
marks = np.unique(np.geomspace(1, trace.iterations, 12).astype(int))
for k in marks:
    c = trace.cost[k - 1]
    print(f"  iter {k:5d}  cost {c:.5f}  " + "#" * int(40 * c / trace.cost[0]))
print()
print(f"control range on the control region: [{best.f.min():+.3f}, {best.f.max():+.3f}]")
