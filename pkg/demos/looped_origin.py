"""The walk on the integers with a loop at the origin.

The origin takes almost all the time, its neighbours are visited about
n / log n times and the outer pair only polylogarithmically often.  The
convergence of Z(0)/n to one is logarithmically slow, which the printed
quantiles show.
"""

import numpy as np

from vrrw.sim import run_seed, scenario_zloop

for steps in (10**5, 10**6):
    stats = [scenario_zloop(steps, run_seed(11, k)) for k in range(60)]
    loc = [s for s in stats if s.localized]
    frac = np.array([s.origin_fraction for s in loc])
    nb = np.array([sum(s.neighbor_ratios) for s in loc])
    print(
        f"n={steps:>8}: {len(loc)}/60 localize, Z(0)/n quartiles {np.round(np.percentile(frac, [25, 50, 75]), 3)}, "
        f"share >= 0.9: {np.mean(frac >= 0.9):.0%}, (Z(-1)+Z(1)) log n / n median {np.median(nb):.2f}"
    )
