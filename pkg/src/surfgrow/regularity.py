"""Empirical epsilon-regularity monitor.

Contraction and decay sequences for G, the k0/r0/alpha formulas, Campanato
(mean oscillation) Holder estimates, singular-candidate detection from a
quantity profile, and biparabolic covers of point sets.

All thresholds live in :class:`RegularityConfig` and are user-chosen
stand-ins, so every outcome here is a measurement on one field and proves
nothing about admissible constants.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from . import constants
from .field import Cylinder, FieldError, SpaceTimeField, cylinder_average
from .inequalities import eta_p
from .quantities import Profile, compute_quantities


@dataclass(frozen=True)
class RegularityConfig:
    delta0: float = constants.DEFAULT_DELTA0
    lam: float = constants.DEFAULT_LAMBDA
    theta: float = constants.DEFAULT_THETA
    p: float = constants.DEFAULT_P
    delta1_star: float = constants.DEFAULT_DELTA1_STAR
    delta2_star: float = constants.DEFAULT_DELTA2_STAR
    delta1: Optional[float] = None
    delta2: Optional[float] = None
    epsilon: float = 0.1
    radii: tuple = (0.5, 0.25, 0.125)
    min_cells: int = constants.MIN_CELLS
    min_time_slices: int = constants.MIN_TIME_SLICES
    stamp: str = constants.EMPIRICAL_STAMP

    def __post_init__(self):
        for name in ("delta0", "delta1_star", "delta2_star"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        eta = eta_p(self.p)
        if not 0 < self.lam < eta:
            raise ValueError(f"lambda must lie in (0, eta_p = {eta:.6g}), got {self.lam}")
        if not 0 < self.theta < eta:
            raise ValueError(f"theta must lie in (0, eta_p = {eta:.6g}), got {self.theta}")
        floor = self.delta0 ** 4 / 8 ** 4
        if self.delta1 is None:
            object.__setattr__(self, "delta1", min(floor, self.delta1_star))
        if self.delta2 is None:
            object.__setattr__(self, "delta2", min(floor, self.delta2_star))

    @property
    def alpha(self) -> float:
        return alpha_from_lambda(self.lam)

    @property
    def eta(self) -> float:
        return eta_p(self.p)


def alpha_from_lambda(lam: float) -> float:
    """Holder exponent -1 / log2(lambda); needs 0 < lambda < 1/2."""
    if not 0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 1/2), got {lam}")
    return -1.0 / math.log2(lam)


def k0_and_r0(G1: float, F1: float, cfg: RegularityConfig) -> tuple[int, float]:
    """Iteration count k0 = ceil(log2((G1 + F1^{1/2}) / delta0)) + 3 (at least 3) and r0 = theta^k0."""
    if not cfg.delta0 > 0:
        raise ValueError("delta0 must be positive")
    if G1 < 0 or F1 < 0:
        raise ValueError("G1 and F1 must be non-negative")
    s = G1 + math.sqrt(F1)
    head = 0 if s <= cfg.delta0 else math.ceil(math.log2(s / cfg.delta0) - 1e-12)
    k0 = head + 3
    return k0, cfg.theta ** k0


# resolvability -----------------------------------------------------------------

def resolvable(field: SpaceTimeField, cyl: Cylinder, cfg: RegularityConfig) -> bool:
    """Ball spans >= min_cells grid cells and the window holds >= min_time_slices stored slices."""
    if 2 * cyl.r / field.grid.dx < cfg.min_cells - 1e-9:
        return False
    a, b = cyl.time_window()
    t = field.times.times
    return int(np.count_nonzero((t >= a - 1e-15) & (t <= b + 1e-15))) >= cfg.min_time_slices


Refiner = Callable[[float], tuple]


def resample_refiner(u: SpaceTimeField, f: SpaceTimeField | None, center, min_cells=constants.MIN_CELLS,
                     slices: int = 16) -> Refiner:
    """Refiner that interpolates existing data onto a finer local window.

    Exact only for band-limited fields that are polynomial of degree <= 1 in
    time (e.g. steady analytic fixtures); for solver output use
    :func:`solver_refiner`, which re-simulates.
    """
    from .field import TimeGrid, TorusGrid, fourier_resample

    def refine(scale):
        n = u.grid.n_points
        while 2 * scale / (u.grid.period / n) < min_cells:
            n *= 2
        x0, t0 = center
        w = scale ** 4
        times = TimeGrid(t0 - w, 2 * w / slices, slices)

        def local(g):
            if g is None:
                return None
            rows = np.array([g.slice_at(t) for t in times.times])
            return SpaceTimeField(TorusGrid(n, g.grid.period), times, fourier_resample(rows, n))
        return local(u), local(f)
    return refine


def solver_refiner(u: SpaceTimeField, forcing, center, min_cells=constants.MIN_CELLS, slices: int = 16) -> Refiner:
    """Refiner that re-simulates the growth equation on each small window."""
    from .solver import step_to_window

    def refine(scale):
        uk = step_to_window(u, forcing, center, scale, min_cells=min_cells, slices=slices)
        fk = None if forcing is None or forcing.is_zero else forcing.to_field(uk.grid, uk.times)
        return uk, fk
    return refine


def _fields_at(u, f, cyl, cfg, refine):
    if resolvable(u, cyl, cfg):
        return u, f
    if refine is None:
        return None
    uk, fk = refine(cyl.r)
    return (uk, fk) if resolvable(uk, cyl, cfg) else None


# contraction / decay ---------------------------------------------------------

@dataclass
class ContractionReport:
    center: tuple
    r: float
    inputs: dict
    hypotheses: dict
    outcomes: dict
    stamp: str = constants.EMPIRICAL_STAMP

    @property
    def in_hypothesis(self) -> dict:
        return {"lambda": self.hypotheses["G+F^1/2<=delta0"],
                "theta_U": self.hypotheses["U<=delta1*"],
                "theta_L": self.hypotheses["L<delta2*"]}


def contraction_check(u: SpaceTimeField, f: SpaceTimeField | None, cfg: RegularityConfig,
                      center=(0.0, 0.0), r: float = 1.0, refine: Refiner | None = None) -> ContractionReport:
    """One contraction step from scale r to lambda r (and theta r) in three variants."""
    x0, t0 = center
    base = compute_quantities(u, f, Cylinder(x0, t0, r), cfg.p)
    smaller = {}
    for key, ratio in (("lambda", cfg.lam), ("theta", cfg.theta)):
        cyl = Cylinder(x0, t0, r * ratio)
        fields = _fields_at(u, f, cyl, cfg, refine)
        if fields is None:
            raise FieldError(f"cylinder of radius {cyl.r:g} is not resolvable; supply a refiner")
        smaller[key] = compute_quantities(fields[0], fields[1], cyl, cfg.p).G
    G1, F1, U1, L1 = base.G, base.F, base.U, base.L
    core = 0.25 * G1 + 0.25 * math.sqrt(F1)
    bounds = {"lambda": core, "theta_U": core + U1 ** 0.25, "theta_L": core + L1 ** 0.25}
    measured = {"lambda": smaller["lambda"], "theta_U": smaller["theta"], "theta_L": smaller["theta"]}
    outcomes = {k: {"G_small": measured[k], "bound": bounds[k], "satisfied": measured[k] <= bounds[k] + 1e-15}
                for k in bounds}
    hypotheses = {
        "G+F^1/2<=delta0": G1 + math.sqrt(F1) <= cfg.delta0,
        "U<=delta1*": U1 <= cfg.delta1_star,
        "L<delta2*": L1 < cfg.delta2_star,
    }
    inputs = {"G": G1, "F": F1, "U": U1, "L": L1, "lambda": cfg.lam, "theta": cfg.theta}
    return ContractionReport(tuple(center), r, inputs, hypotheses, outcomes)


@dataclass
class TraceRow:
    k: int
    scale: float
    G: float
    F_half: float
    U_quarter: float
    L_quarter: float
    bound_decay: float
    bound_U: float
    bound_L: float
    satisfied: bool


@dataclass
class DecayTrace:
    center: tuple
    base: float
    ratio: float
    rows: list = dc_field(default_factory=list)
    truncated_at: Optional[int] = None
    slope: Optional[float] = None
    stamp: str = constants.EMPIRICAL_STAMP

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "scale", "G", "F_half", "U_quarter", "L_quarter",
                    "bound_decay", "bound_U", "bound_L", "satisfied"])
        for r in self.rows:
            w.writerow([r.k, repr(r.scale), repr(r.G), repr(r.F_half), repr(r.U_quarter),
                        repr(r.L_quarter), repr(r.bound_decay), repr(r.bound_U), repr(r.bound_L),
                        int(r.satisfied)])
        return buf.getvalue()


def decay_trace(u: SpaceTimeField, f: SpaceTimeField | None, cfg: RegularityConfig, center=(0.0, 0.0),
                K: int = 3, base: float = 1.0, use_theta: bool = False,
                refine: Refiner | None = None) -> DecayTrace:
    """G along the ladder base * ratio^k with the decay and iterated-contraction bounds.

    Rows stop at the first unresolvable scale (``truncated_at``); nothing is
    extrapolated.  ``slope`` is the least-squares slope of log G against k.
    """
    ratio = cfg.theta if use_theta else cfg.lam
    trace = DecayTrace(tuple(center), base, ratio)
    x0, t0 = center
    G0 = F0h = None
    U_hist, L_hist = [], []
    for k in range(K + 1):
        cyl = Cylinder(x0, t0, base * ratio ** k)
        fields = _fields_at(u, f, cyl, cfg, refine)
        if fields is None:
            trace.truncated_at = k
            break
        q = compute_quantities(fields[0], fields[1], cyl, cfg.p)
        if k == 0:
            G0, F0h = q.G, math.sqrt(q.F)
        decay = (G0 + k * F0h) / 4 ** k
        sum_U = sum(U_hist[i] / 4 ** (k - 1 - i) for i in range(k))
        sum_L = sum(L_hist[i] / 4 ** (k - 1 - i) for i in range(k))
        row = TraceRow(k, cyl.r, q.G, math.sqrt(q.F), q.U ** 0.25, q.L ** 0.25,
                       decay, decay + sum_U, decay + sum_L, q.G <= decay * (1 + 1e-12) + 1e-300)
        trace.rows.append(row)
        U_hist.append(row.U_quarter)
        L_hist.append(row.L_quarter)
    pos = [(r.k, math.log(r.G)) for r in trace.rows if r.G > 0]
    if len(pos) >= 2:
        ks, lg = np.array(pos).T
        trace.slope = float(np.polyfit(ks, lg, 1)[0])
    return trace


# Campanato estimator ------------------------------------------------------------

@dataclass
class CampanatoResult:
    radii: np.ndarray
    oscillation: np.ndarray
    alpha: Optional[float]
    C: float
    degenerate: bool


def mean_oscillation(u: SpaceTimeField, cyl: Cylinder) -> float:
    """(avg_{Q_r} |u - u_{Q_r}|^3)^{1/3}."""
    mean = cylinder_average(u, cyl, 1.0, absolute=False)
    return cylinder_average(u - mean, cyl, 3.0) ** (1 / 3)


def campanato_estimate(u: SpaceTimeField, center=(0.0, 0.0), radii=(0.4, 0.2, 0.1, 0.05)) -> CampanatoResult:
    """Fit M(r) ~ C r^alpha to the mean oscillation over shrinking cylinders."""
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3:
        raise ValueError("need at least three radii")
    x0, t0 = center
    M = np.array([mean_oscillation(u, Cylinder(x0, t0, r)) for r in radii])
    scale = max(float(np.max(np.abs(u.samples))), 1e-300)
    if np.all(M <= 1e-12 * scale):
        return CampanatoResult(radii, M, None, 0.0, True)
    keep = M > 0
    slope, intercept = np.polyfit(np.log(radii[keep]), np.log(M[keep]), 1)
    return CampanatoResult(radii, M, float(slope), float(math.exp(intercept)), False)


# singular candidates -----------------------------------------------------------

@dataclass
class Verdict:
    center: tuple
    regular: bool
    criteria: dict
    margins: dict

    def row(self) -> dict:
        return {"x0": self.center[0], "t0": self.center[1], "regular": int(self.regular),
                **{f"crit_{k}": int(v) for k, v in self.criteria.items()},
                **{f"margin_{k}": v for k, v in self.margins.items()}}


def detect_singular_candidates(profile: Profile, cfg: RegularityConfig, alpha: float | None = None) -> dict:
    """Certify centres as regular by any of the three smallness criteria; the rest are candidates.

    Margins are (smallest tested value - threshold); negative means satisfied.
    """
    verdicts = []
    for center, rows in profile.by_center().items():
        ok = [q for q in rows if not q.error]
        gf = min((q.G + math.sqrt(q.F) for q in ok), default=math.inf)
        sup_u = max((q.U for q in ok), default=math.inf)
        sup_l = max((q.L for q in ok), default=math.inf)
        criteria = {"G": gf <= cfg.delta0 / 2, "U": sup_u <= cfg.delta1, "L": sup_l <= cfg.delta2}
        margins = {"G": gf - cfg.delta0 / 2, "U": sup_u - cfg.delta1, "L": sup_l - cfg.delta2}
        verdicts.append(Verdict(center, any(criteria.values()), criteria, margins))
    candidates = [v.center for v in verdicts if not v.regular]
    return {"candidates": candidates, "verdicts": verdicts, "alpha": alpha if alpha is not None else cfg.alpha,
            "stamp": cfg.stamp}


def verdicts_csv(verdicts) -> str:
    buf = io.StringIO()
    rows = [v.row() for v in verdicts]
    cols = list(rows[0]) if rows else ["x0", "t0", "regular"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


# covers ----------------------------------------------------------------------------

@dataclass
class CoverEstimate:
    points: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    sums: dict
    delta_cap: float

    @property
    def count(self) -> int:
        return int(self.radii.size)

    def covers_all(self) -> bool:
        """Every point lies in some closed cylinder of the cover."""
        if len(self.points) == 0:
            return True
        tol = 1e-12
        for pt in self.points:
            d = np.abs(self.centers - pt)
            if not np.any((d[:, 0] <= self.radii * (1 + tol)) & (d[:, 1] <= self.radii ** 4 * (1 + tol))):
                return False
        return True

    def records(self) -> list:
        return [{"k": k, "sum": s, "count": self.count, "delta_cap": self.delta_cap}
                for k, s in self.sums.items()]


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def _greedy_level(pts, uncovered, r, fill, floor=0.0):
    """Lazy greedy placement of radius-r cylinders among uncovered points.

    Stops once the best placement covers fewer than ``fill`` times the count
    of the first placement at this level (``fill = 0`` covers everything).
    Each placed cylinder is shrunk to the smallest one (radius >= ``floor``)
    containing the points it took, which keeps the cover valid.
    """
    idx = np.flatnonzero(uncovered)
    if idx.size == 0:
        return []
    scaled = pts[idx] * np.array([1.0, r ** -3])
    tree = cKDTree(scaled)
    counts = tree.query_ball_point(scaled, r * (1 + 1e-12), p=np.inf, return_length=True)
    heap = [(-int(c), int(i)) for i, c in enumerate(counts)]
    heapq.heapify(heap)
    alive = np.ones(idx.size, dtype=bool)
    placed = []
    first = None
    while heap:
        neg, i = heapq.heappop(heap)
        if not alive[i]:
            continue
        nb = np.asarray(tree.query_ball_point(scaled[i], r * (1 + 1e-12), p=np.inf), dtype=int)
        nb = nb[alive[nb]]
        c = nb.size
        if heap and c < -heap[0][0]:
            heapq.heappush(heap, (-c, i))
            continue
        if first is None:
            first = c
        if c < fill * first:
            break
        alive[nb] = False
        uncovered[idx[nb]] = False
        took = pts[idx[nb]]
        lo, hi = took.min(axis=0), took.max(axis=0)
        half = (hi - lo) / 2
        placed.append(((lo + hi) / 2, max(half[0], half[1] ** 0.25, floor)))
    return placed


def biparabolic_cover(points, delta_cap: float, exponents=(1.0,), levels: int = 12,
                      fill: float = 0.5) -> CoverEstimate:
    """Greedy cover by closed cylinders |x - xc| <= r, |t - tc| <= r^4 with r < delta_cap.

    Radii descend from delta_cap / 2 by halving; the smallest level covers
    whatever remains.  Placed cylinders are shrunk to fit the points they
    cover, never below the smallest ladder radius.  The totals sum(r_i^k) upper-bound the delta-capped
    biparabolic content (greedy is not the infimum).
    """
    if not delta_cap > 0:
        raise ValueError("delta_cap must be positive")
    pts = _as_points(points)
    uncovered = np.ones(len(pts), dtype=bool)
    centers, radii = [], []
    floor = delta_cap * 2.0 ** -levels
    for j in range(levels):
        r = delta_cap * 2.0 ** -(j + 1)
        placed = _greedy_level(pts, uncovered, r, 0.0 if j == levels - 1 else fill, floor)
        centers += [c for c, _ in placed]
        radii += [rad for _, rad in placed]
        if not uncovered.any():
            break
    radii = np.array(radii)
    sums = {k: float(np.sum(radii ** k)) for k in exponents}
    return CoverEstimate(pts, np.array(centers).reshape(-1, 2), radii, sums, delta_cap)


def cover_count(points, r: float) -> int:
    """Greedy number of radius-r biparabolic cylinders covering the set."""
    pts = _as_points(points)
    return len(_greedy_level(pts, np.ones(len(pts), dtype=bool), r, 0.0))


@dataclass
class DimensionEstimate:
    dimension: float
    radii: np.ndarray
    counts: np.ndarray
    degenerate: bool


def box_dimension_estimate(points, radii) -> DimensionEstimate:
    """Slope of log N(r) against log(1/r) in the biparabolic metric."""
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3:
        raise ValueError("need at least three radii")
    pts = _as_points(points)
    if len(pts) == 0:
        return DimensionEstimate(0.0, radii, np.zeros(radii.size), True)
    counts = np.array([cover_count(pts, r) for r in radii])
    slope = float(np.polyfit(np.log(1 / radii), np.log(counts), 1)[0])
    degenerate = bool(np.all(counts == counts[0]) and counts[0] > 1) or counts.max() >= len(pts)
    return DimensionEstimate(slope, radii, counts, degenerate)
