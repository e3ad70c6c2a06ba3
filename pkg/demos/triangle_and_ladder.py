"""Weighted triangles and the ladder with slowly drifting weights.

On a triangle with weights satisfying the triangle inequality the replicator
flow goes to the unique interior equilibrium.  On the ladder, edge weights
are built so that every three-vertex support is pushed towards infinity; the
script lists what support enumeration finds on a finite truncation.
"""

import numpy as np

from vrrw.experiments import cmd_ladder
from vrrw.replicator import integrate_replicator, solve_triangle_equilibrium
from vrrw.scenarios import LadderParameters, ladder_ex2, triangle

a, b, c = 1.5, 1.0, 1.2
x, h = solve_triangle_equilibrium(a, b, c)
traj = integrate_replicator(triangle(a, b, c), [0.6, 0.3, 0.1], steps=5000)
print(f"closed form x = {np.round(x.values, 6)}, H = {h:.6f}")
print(f"ODE after t=50  {np.round(traj.final.values, 6)}, H = {traj.H_series[-1]:.6f}")

params = LadderParameters(depth=8)
doc = cmd_ladder(params)
g = ladder_ex2(params)
print(f"\nladder depth {params.depth}: {len(doc['traps'])} strongly trapping subsets")
for e in doc["stable_interior_equilibria"]:
    names = [g.label(i) for i in e["support"]]
    slack = min(e["boundary_slack"].values(), key=abs)
    print(f"  {e['classification']} on {names}, smallest boundary slack {slack:.2e}")
