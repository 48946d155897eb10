"""
Biparabolic covers and dimension
================================

Cylinders have spatial radius r and temporal half-height r^4.  A spatial
segment needs about 1/(2r) of them, a segment in time about 1/(2r^4), so
their box dimensions come out near 1 and 4.
"""

import numpy as np

from surfgrow.regularity import biparabolic_cover, box_dimension_estimate

segment = np.c_[np.linspace(0, 1, 10_000), np.zeros(10_000)]

# %%
# The sum of radii over a greedy cover stays near one half of the length for
# every cap.
for cap in (0.5, 0.1, 0.02):
    cover = biparabolic_cover(segment, cap, exponents=(1, 2))
    print(f"cap={cap:<5} cylinders={cover.count:<4} sum r={cover.sums[1]:.4f}  sum r^2={cover.sums[2]:.5f}")

# %%
# Box-counting slopes.
print("spatial segment", box_dimension_estimate(segment, [0.1, 0.05, 0.025, 0.0125]).dimension)
print("time segment   ", box_dimension_estimate(segment[:, ::-1], np.geomspace(0.4, 0.2, 6)).dimension)
print("single point   ", box_dimension_estimate([[0.0, 0.0]], [0.1, 0.05, 0.025]).dimension)
