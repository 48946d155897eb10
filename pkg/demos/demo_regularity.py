"""
Monitoring regularity
=====================

A small-data trajectory should show no singular candidates and a fast
geometric decay of G.  A rough steady profile shows the opposite.  The
thresholds below are chosen by hand, not taken from any theorem.
"""

import numpy as np

from surfgrow.field import SpaceTimeField, TorusGrid
from surfgrow.fixtures import decaying_sine, decaying_sine_forcing, linear_chart, power_profile
from surfgrow.quantities import multiscale_profile
from surfgrow.regularity import (RegularityConfig, campanato_estimate, decay_trace, detect_singular_candidates,
                                 k0_and_r0, solver_refiner, verdicts_csv)
from surfgrow.solver import default_window, integrate_sgm

cfg = RegularityConfig(delta0=0.1)
print(cfg.stamp, " alpha =", cfg.alpha)

# %%
# Small data.  The refiner re-solves on a finer grid whenever a cylinder
# becomes too small for the stored trajectory.
A = 1e-3
grid = TorusGrid(64)
forcing = decaying_sine_forcing(A)
u = integrate_sgm(decaying_sine(A).u(grid.x, -1.0), forcing, default_window(grid))
f = forcing.to_field(grid, u.times)
prof = multiscale_profile(u, f, [(x, 0.0) for x in np.linspace(-2, 2, 5)], [0.5, 0.25, 0.125])
print("candidates:", detect_singular_candidates(prof, cfg)["candidates"])
trace = decay_trace(u, f, cfg, (0.0, 0.0), K=2, refine=solver_refiner(u, forcing, (0.0, 0.0)))
print(trace.to_csv())
print("slope of log G per step", trace.slope)

q = prof.rows[0]
print("k0, r0 from the unit-scale values:", k0_and_r0(q.G, q.F, cfg))

# %%
# A cusp |x|^{1/3} keeps G large at every scale near the origin.
fine = TorusGrid(1024)
rough = SpaceTimeField.steady(power_profile(fine, 1 / 3), fine)
prof = multiscale_profile(rough, None, [(0.0, 0.0), (1.5, 0.0)], [0.5, 0.25, 0.125, 0.0625])
print(verdicts_csv(detect_singular_candidates(prof, cfg)["verdicts"]))

# %%
# Hoelder exponents from mean oscillation decay.  The cusp needs a fine grid
# before the smallest radius sees the power law.
finer = TorusGrid(4096)
print("linear chart", campanato_estimate(SpaceTimeField.steady(linear_chart(fine), fine)).alpha)
print("|x|^1/2     ", campanato_estimate(SpaceTimeField.steady(power_profile(finer, 0.5), finer)).alpha)
