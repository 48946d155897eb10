"""
Scale-invariant quantities
==========================

G, U, O, L and F over biparabolic cylinders, how they behave under the
parabolic rescaling u(rx, r^4 t), and a profile over many centres.
"""

import numpy as np

from surfgrow.field import Cylinder, SpaceTimeField, TimeGrid, TorusGrid
from surfgrow.fixtures import random_bandlimited
from surfgrow.quantities import (compute_quantities, dyadic_radii, multiscale_profile,
                                 scaling_identity_residual, translation_invariance_residual)

grid = TorusGrid(64)
u = SpaceTimeField.steady(np.sin, grid)

# %%
# The steady profile sin x on shrinking cylinders.  G behaves like r for a
# smooth field, since it averages |u_x|^2 times r^2.
for r in dyadic_radii(0.5, 4):
    q = compute_quantities(u, None, Cylinder(0.0, 0.0, r))
    print(f"r={r:<7} G={q.G:.6f}  U={q.U:.6f}  L={q.L:.3e}")

# %%
# Rescaling a random band-limited field and evaluating at the unit scale
# reproduces the quantities at scale r.
rng = np.random.default_rng(0)
times = TimeGrid.spanning(-1, 1, 1e-2)
v, f = random_bandlimited(grid, times, rng), random_bandlimited(grid, times, rng)
for r in (1.0, 0.5, 0.25):
    print("scaling residual at r =", r, scaling_identity_residual(v, f, r))

# %%
# Adding a constant leaves G, L and O alone but not U.
print(translation_invariance_residual(v, 3.0, Cylinder(0.0, 0.0, 0.5)))

# %%
# A profile over a row of centres, written as CSV.
prof = multiscale_profile(v, f, [(x, 0.0) for x in np.linspace(-2, 2, 5)], [0.5, 0.25])
print(prof.to_csv())
