"""
Tube experiments at desk scale
==============================

1. The linear Kakeya field of the Example family over a short delta ladder,
   fitted on log-log axes against the predicted exponent.
2. Capture counts on the thickened surface y1 = t*y2: degenerate Wisewell
   tubes lie inside it, generic Example tubes mostly do not.
"""
import numpy as np

from curvedkakeya.bench import linear_kakeya_experiment
from curvedkakeya.family import example_family, wisewell_family
from curvedkakeya.tubes import Label, Tube, jittered_grid
from curvedkakeya.wolff import capture_count, degenerate_wisewell_labels, rasterize_set, wisewell_surface

ex, ww = example_family(), wisewell_family()

# a ladder down to 2^-7 takes a few seconds
ladder = [2.0**-k for k in range(4, 8)]
res = linear_kakeya_experiment(ex, ladder, 13 / 8, seed=0)
for s in res.stats:
    print(f"delta = {s.delta:<9g} #T = {s.tube_count:<6d} ||sum chi_T||_p = {s.lp[13 / 8]:.4f}")
print(f"fitted slope {res.fit.slope:.3f}, predicted exponent {res.target:.3f}")

d = 2.0**-5
raster = rasterize_set(wisewell_surface(), d)
rng = np.random.default_rng(0)
m = int(0.2 / d)
generic = np.hstack([rng.uniform(0, 1, (m * m, 2)), jittered_grid(m, d, rng)])
degenerate = degenerate_wisewell_labels(jittered_grid(m, d, rng, -0.24, -0.04))

for fam, labels in ((ex, generic), (ww, degenerate)):
    tubes = [Tube(Label.from_z(z), 0.0, 1.0, d) for z in labels]
    rep = capture_count(fam, tubes, raster, 0.5)
    print(f"{fam.name:>9}: {rep.captured:3d}/{rep.tube_count} tubes captured, bound {rep.bound:9.1f}, "
          f"ratio {rep.ratio:.2e}")
