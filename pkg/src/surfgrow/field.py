"""Periodic grids, space-time fields and quadrature over biparabolic cylinders.

Every diagnostic in the package reduces to integrals of a sampled field over
``Q_r(x0, t0) = B_r(x0) x (t0 - r**4, t0 + r**4)``.  Space is handled by
trigonometric interpolation onto composite Gauss-Legendre panels (roughly
``density`` nodes per grid cell); time by the trapezoid rule over the stored
slices, with the two boundary slices obtained by linear interpolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

DEFAULT_DENSITY = 8


class FieldError(ValueError):
    """Raised for invalid fields, grids or cylinder requests."""


@dataclass(frozen=True)
class TorusGrid:
    n_points: int
    period: float = 2 * math.pi

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8 or self.n_points % 2:
            raise FieldError(f"n_points must be an even integer >= 8, got {self.n_points}")
        if not (self.period > 0 and math.isfinite(self.period)):
            raise FieldError(f"period must be positive, got {self.period}")

    @property
    def dx(self) -> float:
        return self.period / self.n_points

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dx

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers of the rfft modes (0 .. n/2)."""
        return 2 * math.pi / self.period * np.arange(self.n_points // 2 + 1)

    def chart(self, x0: float = 0.0) -> np.ndarray:
        """Grid coordinates mapped into [x0 - period/2, x0 + period/2)."""
        half = self.period / 2
        return (self.x - x0 + half) % self.period - half + x0


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise FieldError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0 or int(self.n_steps) != self.n_steps:
            raise FieldError(f"n_steps must be a non-negative integer, got {self.n_steps}")

    @property
    def t_end(self) -> float:
        return self.t_start + self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    @classmethod
    def spanning(cls, t_start: float, t_end: float, dt: float) -> "TimeGrid":
        """Uniform grid from ``t_start`` to ``t_end``; ``dt`` must divide the span."""
        steps = (t_end - t_start) / dt
        n = int(round(steps))
        if n < 0 or abs(steps - n) > 1e-8 * max(1.0, steps):
            raise FieldError(f"dt={dt} does not divide [{t_start}, {t_end}]")
        return cls(t_start, dt, n)


@dataclass(frozen=True)
class Cylinder:
    """Biparabolic cylinder ``B_r(x0) x (t0 - r^4, t0 + r^4)``."""

    x0: float
    t0: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise FieldError(f"cylinder radius must be positive, got {self.r}")

    @property
    def half_time(self) -> float:
        return self.r ** 4

    @property
    def volume(self) -> float:
        return 4.0 * self.r ** 5

    def time_window(self) -> tuple[float, float]:
        return self.t0 - self.r ** 4, self.t0 + self.r ** 4

    def scaled(self, factor: float) -> "Cylinder":
        return Cylinder(self.x0, self.t0, self.r * factor)

    def check_embeds(self, grid: TorusGrid) -> None:
        if 2 * self.r > grid.period * (1 + 1e-12):
            raise FieldError(
                f"cylinder diameter {2 * self.r} exceeds the torus period {grid.period}"
            )


@dataclass(frozen=True)
class TimeNodes:
    """Time quadrature for a (possibly clipped) cylinder window."""

    times: np.ndarray
    weights: np.ndarray
    lower: np.ndarray  # index of the slice at or before each time
    theta: np.ndarray  # interpolation fraction towards lower + 1
    clipped: bool
    interval: tuple[float, float]


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Real samples ``u(x_i, t_n)`` on a torus grid times a uniform time grid."""

    grid: TorusGrid
    times: TimeGrid
    samples: np.ndarray
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[None, :]
        expected = (self.times.n_steps + 1, self.grid.n_points)
        if s.shape != expected:
            raise FieldError(f"samples have shape {s.shape}, expected {expected}")
        if not np.all(np.isfinite(s)):
            raise FieldError("field samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    # construction helpers -------------------------------------------------
    @classmethod
    def from_function(cls, fn: Callable, grid: TorusGrid, times: TimeGrid) -> "SpaceTimeField":
        """Sample ``fn(x, t)`` (vectorised over x) at every grid time."""
        x = grid.x
        rows = [np.broadcast_to(np.asarray(fn(x, t), dtype=float), x.shape) for t in times.times]
        return cls(grid, times, np.array(rows))

    @classmethod
    def steady(cls, profile, grid: TorusGrid, t_start=-1.0, t_end=1.0, n_steps=2):
        """A time-independent field; ``profile`` is an array or a callable of x."""
        values = profile(grid.x) if callable(profile) else np.asarray(profile, dtype=float)
        times = TimeGrid(t_start, (t_end - t_start) / n_steps, n_steps)
        return cls(grid, times, np.tile(values, (n_steps + 1, 1)))

    @classmethod
    def zeros_like(cls, other: "SpaceTimeField") -> "SpaceTimeField":
        return cls(other.grid, other.times, np.zeros_like(other.samples))

    def with_samples(self, samples: np.ndarray) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.times, samples)

    def __sub__(self, a: float) -> "SpaceTimeField":
        return self.with_samples(self.samples - a)

    def __mul__(self, c: float) -> "SpaceTimeField":
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__

    @property
    def is_zero(self) -> bool:
        return not np.any(self.samples)

    # spectral access ------------------------------------------------------
    @property
    def spectrum(self) -> np.ndarray:
        if "spectrum" not in self._cache:
            self._cache["spectrum"] = np.fft.rfft(self.samples, axis=-1)
        return self._cache["spectrum"]

    def derivative(self, order: int) -> "SpaceTimeField":
        key = ("d", order)
        if key not in self._cache:
            self._cache[key] = spectral_derivative(self, order)
        return self._cache[key]

    def slice_at(self, t: float) -> np.ndarray:
        """Linearly interpolated samples at time ``t`` (snapping within dt/2)."""
        i, th = _locate(self.times, t, snap=True)
        if th == 0.0:
            return np.array(self.samples[i])
        return (1 - th) * self.samples[i] + th * self.samples[i + 1]

    # time quadrature ------------------------------------------------------
    def time_nodes(self, cyl: Cylinder) -> TimeNodes:
        a, b = cyl.time_window()
        return self.window_nodes(a, b)

    def window_nodes(self, a: float, b: float) -> TimeNodes:
        tg = self.times
        lo, hi = tg.t_start, tg.t_end
        eps = 1e-12 * max(1.0, abs(lo), abs(hi))
        clipped = a < lo - eps or b > hi + eps
        a_c, b_c = max(a, lo), min(b, hi)
        if b_c < a_c or (b_c == a_c and tg.n_steps > 0):
            raise FieldError(f"time window ({a}, {b}) does not meet the field range [{lo}, {hi}]")
        if tg.n_steps == 0:
            ts = np.array([lo])
            ws = np.array([0.0])
        else:
            grid_t = tg.times
            inner = grid_t[(grid_t > a_c + eps) & (grid_t < b_c - eps)]
            ts = np.concatenate(([a_c], inner, [b_c]))
            h = np.diff(ts)
            ws = np.zeros_like(ts)
            ws[:-1] += h / 2
            ws[1:] += h / 2
        idx, th = zip(*(_locate(tg, t) for t in ts))
        return TimeNodes(ts, ws, np.array(idx), np.array(th), clipped, (a_c, b_c))

    def slices(self, nodes: TimeNodes, spectral: bool = True) -> np.ndarray:
        """Rows (spectral coefficients by default) interpolated at the node times."""
        data = self.spectrum if spectral else self.samples
        lo = nodes.lower
        hi = np.minimum(lo + 1, self.times.n_steps)
        th = nodes.theta[:, None]
        return (1 - th) * data[lo] + th * data[hi]

    def evaluate(self, x: np.ndarray, nodes: TimeNodes) -> np.ndarray:
        """Values at spatial points ``x`` for each time node, shape (n_times, len(x))."""
        return trig_interpolate(self.grid, self.slices(nodes), x)


def _locate(tg: TimeGrid, t: float, snap: bool = False) -> tuple[int, float]:
    """Bracketing slice index and linear-interpolation fraction for time ``t``."""
    s = (t - tg.t_start) / tg.dt
    tol = 0.5 if snap else 1e-9
    if s < -tol or s > tg.n_steps + tol:
        raise FieldError(f"time {t} outside the field range [{tg.t_start}, {tg.t_end}]")
    s = min(max(s, 0.0), float(tg.n_steps))
    nearest = round(s)
    if abs(s - nearest) < 1e-9 or (snap and tg.n_steps == 0):
        return int(nearest), 0.0
    i = int(math.floor(s))
    if i >= tg.n_steps:
        return tg.n_steps, 0.0
    return i, s - i


def trig_interpolate(grid: TorusGrid, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate the real trigonometric interpolant given rfft coefficients.

    ``coeffs`` has shape (..., n/2 + 1); the Nyquist mode enters as a cosine so
    the interpolant is real and reproduces the samples on the grid.
    """
    n = grid.n_points
    w = np.full(n // 2 + 1, 2.0 / n)
    w[0] = w[-1] = 1.0 / n
    phase = np.exp(1j * np.outer(grid.wavenumbers, np.asarray(x, dtype=float)))
    phase[-1] = np.cos(grid.wavenumbers[-1] * np.asarray(x, dtype=float))
    return np.real((coeffs * w) @ phase)


def fourier_resample(values: np.ndarray, n_new: int) -> np.ndarray:
    """Resample periodic rows onto ``n_new`` equispaced points by zero padding/truncation."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    c = np.fft.rfft(values, axis=-1)
    m = n_new // 2 + 1
    out = np.zeros(values.shape[:-1] + (m,), dtype=complex)
    k = min(m, c.shape[-1])
    out[..., :k] = c[..., :k]
    if n_new < n:
        out[..., -1] = out[..., -1].real
    elif n_new > n:
        # split the old Nyquist mode evenly between +k and -k
        out[..., n // 2] *= 0.5
    return np.fft.irfft(out, n=n_new, axis=-1) * (n_new / n)


# spatial quadrature ------------------------------------------------------

_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(m: int) -> tuple[np.ndarray, np.ndarray]:
    if m not in _GAUSS_CACHE:
        _GAUSS_CACHE[m] = np.polynomial.legendre.leggauss(m)
    return _GAUSS_CACHE[m]


def ball_nodes(grid: TorusGrid, x0: float, r: float, density: int = DEFAULT_DENSITY):
    """Composite Gauss-Legendre nodes and weights on ``[x0 - r, x0 + r]``.

    One panel per grid cell (at least one panel), ``density`` nodes per panel.
    """
    panels = max(1, math.ceil(2 * r / grid.dx - 1e-9))
    xi, wi = _gauss(density)
    edges = np.linspace(x0 - r, x0 + r, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    x = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    w = (half[:, None] * wi[None, :]).ravel()
    return x, w


# operations --------------------------------------------------------------

def spectral_derivative(field: SpaceTimeField, order: int) -> SpaceTimeField:
    """Spatial derivative of the given order via the Fourier multiplier (ik)^order."""
    if order not in (1, 2, 3, 4):
        raise FieldError(f"derivative order must be 1..4, got {order}")
    if not np.all(np.isfinite(field.samples)):
        raise FieldError("field samples must be finite")
    mult = (1j * field.grid.wavenumbers) ** order
    if order % 2:
        mult[-1] = 0.0
    out = np.fft.irfft(field.spectrum * mult, n=field.grid.n_points, axis=-1)
    return SpaceTimeField(field.grid, field.times, out)


def _check_exponent(exponent: float) -> None:
    if not exponent >= 1:
        raise FieldError(f"exponent must be >= 1, got {exponent}")


def cylinder_integral(field: SpaceTimeField, cyl: Cylinder, fn=None, density=DEFAULT_DENSITY):
    """Plain integral over the clipped cylinder of ``fn(values)`` (identity by default).

    Returns ``(integral, clipped)``.
    """
    cyl.check_embeds(field.grid)
    nodes = field.time_nodes(cyl)
    x, w = ball_nodes(field.grid, cyl.x0, cyl.r, density)
    vals = field.evaluate(x, nodes)
    if fn is not None:
        vals = fn(vals)
    return float(nodes.weights @ (vals @ w)), nodes.clipped


def cylinder_average(field: SpaceTimeField, cyl: Cylinder, exponent: float = 1.0,
                     absolute: bool = True, density: int = DEFAULT_DENSITY) -> float:
    """Mean of ``|g|^exponent`` (or of signed ``g``) over ``Q_r``.

    The normalising volume is the unclipped ``|Q_r| = 4 r^5`` while the
    integration runs over the part of the cylinder inside the time range.
    """
    _check_exponent(exponent)
    if absolute:
        fn = lambda v: np.abs(v) ** exponent
    elif exponent == 1:
        fn = None
    else:
        raise FieldError("signed averages are only defined for exponent 1")
    total, _ = cylinder_integral(field, cyl, fn, density)
    return total / cyl.volume


def ball_integral(field: SpaceTimeField, x0: float, r: float, t: float,
                  exponent: float = 1.0, density: int = DEFAULT_DENSITY) -> float:
    """``int_{B_r(x0)} |g(., t)|^exponent dx`` with linear interpolation in time."""
    _check_exponent(exponent)
    Cylinder(x0, t, r).check_embeds(field.grid)
    row = np.fft.rfft(field.slice_at(t))
    x, w = ball_nodes(field.grid, x0, r, density)
    vals = trig_interpolate(field.grid, row, x)
    return float((np.abs(vals) ** exponent) @ w)


def sup_over_times(field: SpaceTimeField, cyl: Cylinder, inner, density=DEFAULT_DENSITY) -> float:
    """Maximum of ``inner(values, weights)`` over the time nodes of the cylinder.

    ``inner`` receives the field evaluated at the ball's quadrature nodes for a
    single time slice together with the quadrature weights.  The candidate
    slices are the stored ones strictly inside the clipped window plus the two
    interpolated boundary slices.
    """
    cyl.check_embeds(field.grid)
    nodes = field.time_nodes(cyl)
    x, w = ball_nodes(field.grid, cyl.x0, cyl.r, density)
    vals = field.evaluate(x, nodes)
    return max(float(inner(row, w)) for row in vals)


def rescale_field(field: SpaceTimeField, r: float, center=(0.0, 0.0), grid: TorusGrid | None = None,
                  times: TimeGrid | None = None, factor: float = 1.0) -> SpaceTimeField:
    """Sample ``factor * u(r x + x0, r^4 t + t0)`` on its own grids.

    The default target grid has period ``period / r`` with the same number of
    points, and the default time grid is the image of the source time grid, so
    a cylinder centred on grid points is a pure relabelling of samples.
    """
    if not r > 0:
        raise FieldError(f"scale must be positive, got {r}")
    x0, t0 = center
    src = field.times
    if grid is None:
        grid = TorusGrid(field.grid.n_points, field.grid.period / r)
    if times is None:
        times = TimeGrid((src.t_start - t0) / r ** 4, src.dt / r ** 4, src.n_steps)
    src_t = r ** 4 * times.times + t0
    eps = 1e-9 * src.dt
    if src_t[0] < src.t_start - eps or src_t[-1] > src.t_end + eps:
        raise FieldError("rescaled time window maps outside the source time range")
    src_t = np.clip(src_t, src.t_start, src.t_end)
    located = [_locate(src, t) for t in src_t]
    lower = np.array([i for i, _ in located])
    theta = np.array([th for _, th in located])[:, None]
    upper = np.minimum(lower + 1, src.n_steps)
    coeffs = (1 - theta) * field.spectrum[lower] + theta * field.spectrum[upper]
    samples = trig_interpolate(field.grid, coeffs, r * grid.x + x0)
    return SpaceTimeField(grid, times, factor * samples)
