"""Analytic test fields: exact solutions, smooth charts and rough profiles.

These are used by the tests, the demos and the command-line presets.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from .field import SpaceTimeField, TimeGrid, TorusGrid
from .solver import AnalyticField, ForcingSpec, manufactured_forcing


def decaying_sine(amplitude: float = 1.0) -> AnalyticField:
    """u = A e^{-t} sin x; it solves the biharmonic heat equation exactly."""
    A = amplitude
    e = lambda t: A * np.exp(-t)
    return AnalyticField(
        u=lambda x, t: e(t) * np.sin(x),
        u_t=lambda x, t: -e(t) * np.sin(x),
        u_x=lambda x, t: e(t) * np.cos(x),
        u_xx=lambda x, t: -e(t) * np.sin(x),
        u_xxx=lambda x, t: -e(t) * np.cos(x),
        u_xxxx=lambda x, t: e(t) * np.sin(x),
    )


def decaying_sine_forcing(amplitude: float = 1.0) -> ForcingSpec:
    """Closed form of the forcing for :func:`decaying_sine`: f = -2 A^2 e^{-2t} cos 2x."""
    A = amplitude
    return ForcingSpec(
        "manufactured",
        fn=lambda x, t: -2 * A ** 2 * np.exp(-2 * t) * np.cos(2 * x),
        exact=decaying_sine(A),
        label=f"decaying-sine A={A}",
    )


def oscillating_modes() -> AnalyticField:
    """u = cos t sin x + sin(t) cos(2x)/2, a manufactured solution with u_t + u_xxxx != 0."""
    c, s = np.cos, np.sin
    return AnalyticField(
        u=lambda x, t: c(t) * s(x) + 0.5 * s(t) * c(2 * x),
        u_t=lambda x, t: -s(t) * s(x) + 0.5 * c(t) * c(2 * x),
        u_x=lambda x, t: c(t) * c(x) - s(t) * s(2 * x),
        u_xx=lambda x, t: -c(t) * s(x) - 2 * s(t) * c(2 * x),
        u_xxx=lambda x, t: -c(t) * c(x) + 4 * s(t) * s(2 * x),
        u_xxxx=lambda x, t: c(t) * s(x) + 8 * s(t) * c(2 * x),
    )


MANUFACTURED = {
    "decaying-sine": (decaying_sine, decaying_sine_forcing),
    "oscillating-modes": (lambda amplitude=1.0: oscillating_modes(),
                          lambda amplitude=1.0: manufactured_forcing(oscillating_modes())),
}


def linear_chart(grid: TorusGrid, half_width: float = 2.0, softness: float = 0.2) -> np.ndarray:
    """Smooth periodic profile equal to x on a neighbourhood of 0.

    u_x is a normalised erf window, so u(x) = x to machine precision for
    |x| <= half_width - 7.5 * softness and the profile is numerically
    band-limited (Gaussian decay of the Fourier coefficients).
    """
    a, s, P = half_width, softness, grid.period
    m = 2 * a / P

    def prim(y):
        return y * erf(y / s) + s / math.sqrt(math.pi) * np.exp(-(y / s) ** 2)

    x = grid.chart(0.0)
    W = 0.5 * (prim(x + a) - prim(x - a))
    W0 = 0.5 * (prim(a) - prim(-a))
    return (W - W0 - m * x) / (1 - m)


def power_profile(grid: TorusGrid, exponent: float) -> np.ndarray:
    """|2 sin(x/2)|^exponent: behaves like |x|^exponent at 0 and is smooth elsewhere."""
    return np.abs(2 * np.sin(grid.x / 2)) ** exponent


def random_bandlimited(grid: TorusGrid, times: TimeGrid, rng: np.random.Generator,
                       max_mode: int = 6, amplitude: float = 1.0) -> SpaceTimeField:
    """Random smooth field sum_k a_k(t) cos kx + b_k(t) sin kx with a_k, b_k quadratic in t."""
    k = np.arange(0, max_mode + 1)
    decay = 1.0 / (1.0 + k) ** 1.5
    coef = rng.standard_normal((3, 2, k.size)) * decay * amplitude
    x = grid.x
    rows = []
    for t in times.times:
        c = coef[0] + coef[1] * t + 0.5 * coef[2] * t * t
        rows.append(c[0] @ np.cos(np.outer(k, x)) + c[1] @ np.sin(np.outer(k, x)))
    return SpaceTimeField(grid, times, np.array(rows))
