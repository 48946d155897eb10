"""
Checking the energy identity and interpolation bounds
=====================================================

For a smooth solution the local energy inequality holds with equality, so
its residual measures discretisation error.  The interpolation bounds are
reported as ratios against a configurable constant.
"""

import numpy as np

from surfgrow.field import Cylinder, SpaceTimeField, TorusGrid
from surfgrow.fixtures import decaying_sine, decaying_sine_forcing
from surfgrow.inequalities import (CutoffSpec, eta_p, f_decay_check, interpolation_checks,
                                   local_energy_check, summary_table)
from surfgrow.solver import default_window, integrate_sgm

grid = TorusGrid(64)
forcing = decaying_sine_forcing()
phi = CutoffSpec(0.0, 0.0, 1.0)

# %%
# Energy residual at two time steps; second order means a ratio near four.
residuals = []
for dt in (1e-3, 5e-4):
    u = integrate_sgm(decaying_sine().u(grid.x, -1.0), forcing, default_window(grid, dt=dt))
    f = forcing.to_field(grid, u.times)
    rep = local_energy_check(u, f, phi, 0.0)
    residuals.append(abs(rep.residual))
    print(f"dt={dt:.0e}  lhs={rep.lhs:.8f}  rhs={rep.rhs:.8f}  residual={rep.residual:.2e}")
print("ratio", residuals[0] / residuals[1])

# %%
# The shifted form with u - 5 gives the same residual here.
print(local_energy_check(u, f, phi, 0.0, a=5.0).residual)

# %%
# Interpolation ratios on the last trajectory, and F decay for a cosine
# forcing at scales eta_3^k.
reports = interpolation_checks(u, Cylinder(0.0, 0.0, 0.5))
reports += f_decay_check(SpaceTimeField.steady(np.cos, grid), 3, eta_p(3), 2)
print(summary_table(reports))
