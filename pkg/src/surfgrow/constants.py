"""Tolerance policy and default thresholds, kept in one place.

None of the thresholds below are the (non-constructive) constants of the
regularity theory; they are user-configurable stand-ins and every report
produced with them carries ``EMPIRICAL_STAMP``.
"""

EMPIRICAL_STAMP = "empirical thresholds, not the theory's constants"

# Cap on empirical ratios for inequalities with an unspecified universal constant.
C_CAP = 100.0

# name -> (relative floor, coefficient of (dt / tau)^2); both multiply the
# magnitude of the terms entering the check.  tau is the time scale of the
# test function (r^4 for a cutoff of spatial radius r).
TOLERANCES = {
    "weak_form": (1e-9, 5.0),
    "local_energy": (1e-9, 5.0),
    "local_energy_shifted": (1e-9, 5.0),
}

# Regularity monitor defaults.
DEFAULT_DELTA0 = 0.1
DEFAULT_LAMBDA = 1 / 32
DEFAULT_THETA = 1 / 32
DEFAULT_P = 3.0
DEFAULT_DELTA1_STAR = 1.0
DEFAULT_DELTA2_STAR = 1.0

# Smallest resolvable cylinder: spatial cells across the ball, stored slices in the window.
MIN_CELLS = 4
MIN_TIME_SLICES = 2


def tolerance(name: str, dt: float, tau: float, scale: float) -> float:
    floor, coeff = TOLERANCES[name]
    return (floor + coeff * (dt / tau) ** 2) * max(scale, 1e-300)


def constants_ledger() -> dict:
    """Snapshot of every configurable constant, embedded in output files."""
    return {
        "stamp": EMPIRICAL_STAMP,
        "C_cap": C_CAP,
        "tolerances": {k: list(v) for k, v in TOLERANCES.items()},
        "delta0": DEFAULT_DELTA0,
        "lambda": DEFAULT_LAMBDA,
        "theta": DEFAULT_THETA,
        "p": DEFAULT_P,
        "delta1_star": DEFAULT_DELTA1_STAR,
        "delta2_star": DEFAULT_DELTA2_STAR,
        "min_cells": MIN_CELLS,
        "min_time_slices": MIN_TIME_SLICES,
    }
