"""Localization of the walk on the six-vertex example.

The square A-B-C-D carries a face of strictly stable equilibria; C, D and E
form a triangle.  Started close to x = (3/8, 3/8, 1/8, 1/8, 0, 0), about half
the walks settle on {A, B, C, D, E}: the square is visited linearly and E
grows like the square root of n.
"""

import numpy as np

from vrrw import scenarios
from vrrw.experiments import equilibrium_catalogue
from vrrw.sim import RunConfig, run, run_seed, theoretical_exponent

g = scenarios.example1()
print("strictly stable equilibria:")
for entry in equilibrium_catalogue(g):
    r = entry.report
    if r.classification == "strictly_stable":
        names = [g.label(i) for i in r.support]
        print(f"  support {names}  H={r.H:.4f}  free directions={entry.directions.shape[1]}")

localized = []
for k in range(40):
    cfg = RunConfig(g, scenarios.example1_initial_counts(), 0, 10**6, run_seed(7, k))
    rep = run(cfg)
    if rep.localized and rep.range_estimate == (0, 1, 2, 3, 4):
        localized.append(rep)
print(f"\n{len(localized)} of 40 walks localize on A..E after 10^6 steps")

for rep in localized[:5]:
    y = rep.final_Z.copy()
    y[4:] = 0
    predicted = theoretical_exponent(g, y / y.sum(), 4)
    print(
        f"  seed {rep.seed:>3}: v = {np.round(rep.final_v.values, 3)}, "
        f"E exponent {rep.exponent_fits[4].slope:.3f} (predicted {predicted:.3f})"
    )
