"""
Projected dimension of a 2-dimensional cloud
============================================

Project a (delta, 2)-cloud through M(t) for many t and estimate the box
dimension of each image. The Wisewell family sends the plane (a, 0, 0, b)
to a curve for every t; the Example family keeps a generic plane
2-dimensional.
"""
import numpy as np

from curvedkakeya.family import example_family, wisewell_family
from curvedkakeya.projection import exceptional_scan, generate_cloud, generic_plane_cloud

d = 2.0**-8  # 2^-10 gives cleaner numbers but takes about a minute
runs = [
    (wisewell_family(), generate_cloud("wisewell_plane", d, 2.0)),
    (example_family(), generic_plane_cloud(example_family(), d, seed=0)),
]
for f, cloud in runs:
    rep = exceptional_scan(f, cloud, a=1.2, samples=16)
    s = rep.slopes
    print(f"{f.name:>9}: {len(cloud)} points, slopes {s.min():.3f} .. {s.max():.3f}, "
          f"median {np.median(s):.3f}, {rep.flagged_fraction:.0%} of t below 1.2")
