"""Numerical laboratory for the forced surface growth equation u_t + u_xxxx + (u_x^2)_xx = f.

Modules:

- ``field``: periodic grids, space-time fields, cylinder quadrature
- ``solver``: pseudospectral ETD2RK / IMEX integrators
- ``quantities``: the scale-invariant quantities G, U, O, L, F
- ``inequalities``: weak form, local energy and interpolation checks
- ``regularity``: decay traces, Campanato estimates, singular candidates, covers
- ``cli``: batch runs (``surfgrow`` console script)
"""
from .field import Cylinder, FieldError, SpaceTimeField, TimeGrid, TorusGrid
from .solver import BlowUpError, ForcingSpec, SolverConfig, integrate_biharmonic, integrate_sgm
from .quantities import ScaleQuantities, compute_quantities, multiscale_profile
from .regularity import RegularityConfig

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "Cylinder", "FieldError", "ForcingSpec", "RegularityConfig", "ScaleQuantities",
    "SolverConfig", "SpaceTimeField", "TimeGrid", "TorusGrid", "compute_quantities",
    "integrate_biharmonic", "integrate_sgm", "multiscale_profile",
]
