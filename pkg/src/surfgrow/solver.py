"""Pseudospectral time stepping for the forced surface growth equation

    u_t + u_xxxx + (u_x^2)_xx = f          on the torus,

and for the biharmonic heat equation v_t + v_xxxx = 0.

The linear part is diagonal in Fourier space and is integrated exactly with
the factor exp(-k^4 dt).  The remainder N(u, t) = f - (u_x^2)_xx is treated
explicitly, either by the second-order exponential Runge-Kutta scheme of
Cox & Matthews (ETD2RK, default) or by an implicit-explicit Euler step.
"""
from __future__ import annotations

import json
import math
import time as _time
from dataclasses import dataclass, field as dc_field, asdict
from typing import Callable, Optional

import numpy as np

from .field import FieldError, SpaceTimeField, TimeGrid, TorusGrid, fourier_resample

SCHEMES = ("etdrk2", "imex-euler")


class BlowUpError(RuntimeError):
    """Raised when the solution stops being finite."""

    def __init__(self, last_time: float, max_abs: float, step: int):
        self.last_time = last_time
        self.max_abs = max_abs
        self.step = step
        super().__init__(
            f"non-finite mode at step {step}; last finite time {last_time:.6g}, max|u| = {max_abs:.6g}"
        )


@dataclass(frozen=True)
class SolverConfig:
    grid: TorusGrid
    dt: float
    t_end: float
    t_start: float = 0.0
    dealias: bool = True
    scheme: str = "etdrk2"
    store_stride: int = 1
    nonlinear: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise FieldError(f"dt must be positive, got {self.dt}")
        if not self.t_end > self.t_start:
            raise FieldError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if int(self.store_stride) != self.store_stride or self.store_stride < 1:
            raise FieldError(f"store_stride must be a positive integer, got {self.store_stride}")
        if self.scheme not in SCHEMES:
            raise FieldError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        n = self.n_steps
        if n % self.store_stride:
            raise FieldError(f"store_stride {self.store_stride} does not divide {n} steps")

    @property
    def n_steps(self) -> int:
        return TimeGrid.spanning(self.t_start, self.t_end, self.dt).n_steps

    @property
    def output_times(self) -> TimeGrid:
        return TimeGrid(self.t_start, self.dt * self.store_stride, self.n_steps // self.store_stride)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {"n_points": self.grid.n_points, "period": self.grid.period}
        return d


@dataclass(frozen=True)
class AnalyticField:
    """Closed-form u(x, t) with the derivatives needed to manufacture a forcing."""

    u: Callable
    u_t: Optional[Callable] = None
    u_x: Optional[Callable] = None
    u_xx: Optional[Callable] = None
    u_xxx: Optional[Callable] = None
    u_xxxx: Optional[Callable] = None

    def sample(self, grid: TorusGrid, times: TimeGrid) -> SpaceTimeField:
        return SpaceTimeField.from_function(self.u, grid, times)


@dataclass(frozen=True)
class ForcingSpec:
    """Right-hand side f of the growth equation.

    ``kind`` is one of ``zero``, ``analytic`` (``fn(x, t)``), ``manufactured``
    (``fn`` plus the exact solution it was built from) or ``sampled`` (a
    SpaceTimeField, linearly interpolated in time).
    """

    kind: str = "zero"
    fn: Optional[Callable] = None
    exact: Optional[AnalyticField] = None
    samples: Optional[SpaceTimeField] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("zero", "analytic", "manufactured", "sampled"):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.kind in ("analytic", "manufactured") and self.fn is None:
            raise ValueError(f"{self.kind} forcing needs a callable")
        if self.kind == "manufactured" and self.exact is None:
            raise ValueError("manufactured forcing must carry its exact solution")
        if self.kind == "sampled" and self.samples is None:
            raise ValueError("sampled forcing needs a field")

    @classmethod
    def zero(cls) -> "ForcingSpec":
        return cls("zero")

    @classmethod
    def analytic(cls, fn: Callable, label: str = "") -> "ForcingSpec":
        return cls("analytic", fn=fn, label=label)

    @classmethod
    def sampled(cls, f: SpaceTimeField) -> "ForcingSpec":
        return cls("sampled", samples=f)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def evaluate(self, grid: TorusGrid, t: float) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(grid.n_points)
        if self.kind == "sampled":
            f = self.samples
            if f.grid.n_points != grid.n_points:
                return fourier_resample(f.slice_at(t), grid.n_points)
            return f.slice_at(t)
        return np.broadcast_to(np.asarray(self.fn(grid.x, t), dtype=float), (grid.n_points,))

    def to_field(self, grid: TorusGrid, times: TimeGrid) -> SpaceTimeField:
        if self.kind == "sampled" and self.samples.grid == grid and self.samples.times == times:
            return self.samples
        return SpaceTimeField(grid, times, np.array([self.evaluate(grid, t) for t in times.times]))


def manufactured_forcing(exact: AnalyticField, grid: TorusGrid | None = None) -> ForcingSpec:
    """Forcing that makes ``exact`` a solution: f = u_t + u_xxxx + (u_x^2)_xx.

    The quadratic term is expanded as 2 (u_xx^2 + u_x u_xxx) when ``u_xxx`` is
    supplied; otherwise u_x^2 is sampled on ``grid`` and differentiated
    spectrally, so ``grid`` is then required.
    """
    for name in ("u_t", "u_x", "u_xx", "u_xxxx"):
        if getattr(exact, name) is None:
            raise ValueError(f"manufactured forcing needs the derivative {name}")
    if exact.u_xxx is not None:
        def fn(x, t):
            ux, uxx = exact.u_x(x, t), exact.u_xx(x, t)
            return exact.u_t(x, t) + exact.u_xxxx(x, t) + 2 * (uxx ** 2 + ux * exact.u_xxx(x, t))
    else:
        if grid is None:
            raise ValueError("without u_xxx a grid is needed to differentiate u_x^2")
        k2 = grid.wavenumbers ** 2

        def fn(x, t):
            sq = np.asarray(exact.u_x(grid.x, t), dtype=float) ** 2
            quad = np.fft.irfft(-k2 * np.fft.rfft(sq), n=grid.n_points)
            if not np.array_equal(np.asarray(x), grid.x):
                raise ValueError("spectral manufactured forcing is only defined on its grid")
            return exact.u_t(x, t) + exact.u_xxxx(x, t) + quad
    return ForcingSpec("manufactured", fn=fn, exact=exact)


# stepping --------------------------------------------------------------------

def _phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, stable near 0."""
    phi1 = np.empty_like(z)
    phi2 = np.empty_like(z)
    small = np.abs(z) < 1e-3
    zs = z[small]
    phi1[small] = 1 + zs / 2 + zs ** 2 / 6 + zs ** 3 / 24
    phi2[small] = 0.5 + zs / 6 + zs ** 2 / 24 + zs ** 3 / 120
    zl = z[~small]
    em1 = np.expm1(zl)
    phi1[~small] = em1 / zl
    phi2[~small] = (em1 - zl) / zl ** 2
    return phi1, phi2


class _Stepper:
    def __init__(self, cfg: SolverConfig, forcing: ForcingSpec, nonlinear: bool):
        grid = cfg.grid
        self.cfg = cfg
        self.grid = grid
        self.forcing = forcing
        self.nonlinear = nonlinear and cfg.nonlinear
        k = grid.wavenumbers
        self.ik = 1j * k
        self.ik[-1] = 0.0
        self.k2 = k ** 2
        self.lin = -k ** 4
        self.mask = np.ones_like(k)
        if cfg.dealias:
            self.mask[np.arange(k.size) > grid.n_points // 3] = 0.0
        self._coeffs = {}
        self.imag_residue = 0.0

    def coeffs(self, h: float):
        if h not in self._coeffs:
            z = self.lin * h
            phi1, phi2 = _phi_functions(z)
            self._coeffs[h] = (np.exp(z), h * phi1, h * phi2, 1.0 / (1.0 - h * self.lin))
        return self._coeffs[h]

    def rhs(self, uh: np.ndarray, t: float) -> np.ndarray:
        n = self.grid.n_points
        out = np.zeros_like(uh)
        if not self.forcing.is_zero:
            out += np.fft.rfft(self.forcing.evaluate(self.grid, t))
        if self.nonlinear:
            ux = np.fft.irfft(self.ik * uh, n=n)
            out += self.k2 * self.mask * np.fft.rfft(ux * ux)
        return out

    def enforce_real(self, uh: np.ndarray) -> np.ndarray:
        res = max(abs(uh[0].imag), abs(uh[-1].imag))
        self.imag_residue = max(self.imag_residue, res / self.grid.n_points)
        uh[0] = uh[0].real
        uh[-1] = uh[-1].real
        return uh

    def step(self, uh: np.ndarray, t: float, h: float) -> np.ndarray:
        E, p1, p2, imex = self.coeffs(h)
        if self.forcing.is_zero and not self.nonlinear:
            return E * uh
        n0 = self.rhs(uh, t)
        if self.cfg.scheme == "imex-euler":
            return imex * (uh + h * n0)
        a = E * uh + p1 * n0
        n1 = self.rhs(a, t + h)
        return a + p2 * (n1 - n0)


@dataclass
class RunRecord:
    """Metadata for one integration; serialised as a single JSON line."""

    config: dict
    wall_time: float = 0.0
    steps: int = 0
    blow_up: bool = False
    last_finite_time: float = math.nan
    max_abs: float = 0.0
    imag_residue: float = 0.0
    extra: dict = dc_field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)


def _integrate(u0, forcing: ForcingSpec, cfg: SolverConfig, nonlinear: bool,
               record: RunRecord | None = None) -> SpaceTimeField:
    grid = cfg.grid
    u0 = np.asarray(u0(grid.x) if callable(u0) else u0, dtype=float)
    if u0.shape != (grid.n_points,):
        raise FieldError(f"initial profile has shape {u0.shape}, expected ({grid.n_points},)")
    if not np.all(np.isfinite(u0)):
        raise FieldError("initial profile must be finite")
    stepper = _Stepper(cfg, forcing, nonlinear)
    n = cfg.n_steps
    out_times = cfg.output_times
    stored = np.empty((out_times.n_steps + 1, grid.n_points))
    stored[0] = u0
    uh = np.fft.rfft(u0)
    started = _time.perf_counter()
    t = cfg.t_start
    for i in range(1, n + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            new = stepper.enforce_real(stepper.step(uh, t, cfg.dt))
        t = cfg.t_start + i * cfg.dt
        if not np.all(np.isfinite(new)):
            last = np.fft.irfft(uh, n=grid.n_points)
            err = BlowUpError(t - cfg.dt, float(np.max(np.abs(last))), i)
            if record is not None:
                record.blow_up = True
                record.last_finite_time = err.last_time
                record.max_abs = err.max_abs
                record.steps = i - 1
            raise err
        uh = new
        if i % cfg.store_stride == 0:
            stored[i // cfg.store_stride] = np.fft.irfft(uh, n=grid.n_points)
    if record is not None:
        record.wall_time = _time.perf_counter() - started
        record.steps = n
        record.last_finite_time = t
        record.max_abs = float(np.max(np.abs(stored)))
        record.imag_residue = stepper.imag_residue
    return SpaceTimeField(grid, out_times, stored)


def integrate_sgm(u0, forcing: ForcingSpec | None, cfg: SolverConfig,
                  record: RunRecord | None = None) -> SpaceTimeField:
    """Integrate the forced growth equation from ``u0`` over ``[t_start, t_end]``."""
    return _integrate(u0, forcing or ForcingSpec.zero(), cfg, True, record)


def integrate_biharmonic(v0, cfg: SolverConfig, record: RunRecord | None = None) -> SpaceTimeField:
    """Integrate v_t + v_xxxx = 0; every mode decays exactly as exp(-k^4 t)."""
    return _integrate(v0, ForcingSpec.zero(), cfg, False, record)


def default_window(grid: TorusGrid, T: float = 1.0, dt: float = 1e-3, **kw) -> SolverConfig:
    """Config over ``[-T, T]`` so cylinders centred at t0 = 0 are interior."""
    return SolverConfig(grid=grid, dt=dt, t_start=-T, t_end=T, **kw)


def step_to_window(u: SpaceTimeField, forcing: ForcingSpec | None, center, r: float,
                   min_cells: int = 4, slices: int = 16, dealias: bool = True) -> SpaceTimeField:
    """Re-simulate a stored trajectory on the window of ``Q_r(center)``.

    Starting from the last stored slice before ``t0 - r^4``, one exponential
    step of the remaining gap reaches the window start; the window itself is
    then covered by ``slices`` uniform steps on a grid fine enough that the ball
    spans at least ``min_cells`` cells.  This is how small cylinders of a coarse
    run are made resolvable without interpolating below the stored resolution.
    """
    forcing = forcing or ForcingSpec.zero()
    x0, t0 = center
    w = r ** 4
    a, b = t0 - w, t0 + w
    tg = u.times
    if a < tg.t_start - 1e-12 or b > tg.t_end + 1e-12:
        raise FieldError("window lies outside the stored trajectory")
    n = u.grid.n_points
    while 2 * r / (u.grid.period / n) < min_cells:
        n *= 2
    grid = TorusGrid(n, u.grid.period)
    i = int(math.floor((a - tg.t_start) / tg.dt + 1e-9))
    i = min(max(i, 0), tg.n_steps)
    state = u.samples[i]
    if n != u.grid.n_points:
        state = fourier_resample(state, n)
    t_i = tg.t_start + i * tg.dt
    h = 2 * w / slices
    cfg = SolverConfig(grid=grid, dt=h, t_start=a, t_end=b, dealias=dealias)
    stepper = _Stepper(cfg, forcing, True)
    uh = np.fft.rfft(state)
    gap = a - t_i
    if gap > 1e-14 * max(1.0, abs(a)):
        uh = stepper.enforce_real(stepper.step(uh, t_i, gap))
    rows = [np.fft.irfft(uh, n=n)]
    t = a
    for j in range(1, slices + 1):
        uh = stepper.enforce_real(stepper.step(uh, t, h))
        t = a + j * h
        if not np.all(np.isfinite(uh)):
            raise BlowUpError(t - h, float(np.max(np.abs(rows[-1]))), j)
        rows.append(np.fft.irfft(uh, n=n))
    return SpaceTimeField(grid, TimeGrid(a, h, slices), np.array(rows))
