"""Scale-invariant quantities G_r, U_r, O_r, L_r, F_r at biparabolic cylinders.

Normalisation: G and F use averages over Q_r (volume 4 r^5); U, O and L use
plain integrals with the explicit 1/r prefactor.  With this choice the
parabolic rescaling u^r(x, t) = u(r x, r^4 t), f^r = r^4 f(r x, r^4 t) maps
each quantity at scale r to the same quantity at scale 1.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .field import (DEFAULT_DENSITY, Cylinder, FieldError, SpaceTimeField, ball_nodes,
                    rescale_field)

PROFILE_COLUMNS = ("x0", "t0", "r", "G", "U", "O", "L", "F", "clipped")


@dataclass(frozen=True)
class ScaleQuantities:
    cyl: Cylinder
    p: float
    G: float
    U: float
    O: float
    L: float
    F: float
    clipped: bool = False
    error: str = ""

    def as_row(self) -> dict:
        return {"x0": self.cyl.x0, "t0": self.cyl.t0, "r": self.cyl.r, "G": self.G, "U": self.U,
                "O": self.O, "L": self.L, "F": self.F, "clipped": int(self.clipped)}

    def values(self) -> dict:
        return {"G": self.G, "U": self.U, "O": self.O, "L": self.L, "F": self.F}


def _check_p(p: float) -> None:
    if not p > 1.5:
        raise FieldError(f"forcing exponent p must exceed 3/2, got {p}")


def ball_profiles(u: SpaceTimeField, cyl: Cylinder, density: int = DEFAULT_DENSITY):
    """Per-slice (1/r) int |u|^2 and (1/r) int |u - u_B|^2 over the ball."""
    nodes = u.time_nodes(cyl)
    x, w = ball_nodes(u.grid, cyl.x0, cyl.r, density)
    vals = u.evaluate(x, nodes)
    energy = (vals ** 2) @ w / cyl.r
    means = vals @ w / (2 * cyl.r)
    osc = ((vals - means[:, None]) ** 2) @ w / cyl.r
    return energy, osc, nodes


def mean_vs_constant_violations(u: SpaceTimeField, cyl: Cylinder, constants, rtol: float = 1e-12,
                                density: int = DEFAULT_DENSITY) -> int:
    """Count (slice, c) pairs where int_B |u - u_B|^2 exceeds int_B |u - c|^2.

    The ball mean minimises the L^2 distance to constants, so the count
    should be zero; ``c = 0`` compares O_r against U_r slice by slice.
    """
    nodes = u.time_nodes(cyl)
    x, w = ball_nodes(u.grid, cyl.x0, cyl.r, density)
    vals = u.evaluate(x, nodes)
    means = vals @ w / (2 * cyl.r)
    osc = ((vals - means[:, None]) ** 2) @ w
    bad = 0
    for c in np.atleast_1d(np.asarray(constants, dtype=float)):
        dev = ((vals - c) ** 2) @ w
        bad += int(np.count_nonzero(osc > dev * (1 + rtol) + 1e-300))
    return bad


def compute_quantities(u: SpaceTimeField, f: SpaceTimeField | None, cyl: Cylinder, p: float = 3.0,
                       density: int = DEFAULT_DENSITY) -> ScaleQuantities:
    """All five quantities at one cylinder; ``f=None`` means zero forcing."""
    _check_p(p)
    cyl.check_embeds(u.grid)
    nodes = u.time_nodes(cyl)
    x, w = ball_nodes(u.grid, cyl.x0, cyl.r, density)
    tw = nodes.weights
    r = cyl.r

    ux = u.derivative(1).evaluate(x, nodes)
    G = r * (tw @ (np.abs(ux) ** 3 @ w) / cyl.volume) ** (1 / 3)

    uxx = u.derivative(2).evaluate(x, nodes)
    L = tw @ (uxx ** 2 @ w) / r

    vals = u.evaluate(x, nodes)
    U = float(np.max((vals ** 2) @ w)) / r
    means = vals @ w / (2 * r)
    O = float(np.max(((vals - means[:, None]) ** 2) @ w)) / r

    if f is None or f.is_zero:
        F = 0.0
    else:
        fv = f.evaluate(x, f.time_nodes(cyl))
        ftw = f.time_nodes(cyl).weights
        F = r ** 4 * (ftw @ (np.abs(fv) ** p @ w) / cyl.volume) ** (1 / p)
    return ScaleQuantities(cyl, p, float(G), U, O, float(L), float(F), nodes.clipped)


def scaling_identity_residual(u: SpaceTimeField, f: SpaceTimeField | None, r: float,
                              cyl_target: Cylinder | None = None, p: float = 3.0,
                              density: int = DEFAULT_DENSITY) -> float:
    """Max relative mismatch between X_1[u^r] and X_r[u] over the five quantities.

    ``cyl_target`` is the unit cylinder in rescaled coordinates (default Q_1(0,0));
    the source cylinder is Q_r centred at the same point in original coordinates.
    """
    center = (0.0, 0.0) if cyl_target is None else (cyl_target.x0, cyl_target.t0)
    source = compute_quantities(u, f, Cylinder(center[0], center[1], r), p, density)
    ur = rescale_field(u, r, center)
    fr = None if f is None else rescale_field(f, r, center, factor=r ** 4)
    target = compute_quantities(ur, fr, Cylinder(0.0, 0.0, 1.0), p, density)
    worst = 0.0
    for key, a in source.values().items():
        b = target.values()[key]
        scale = max(abs(a), abs(b))
        if scale > 0:
            worst = max(worst, abs(a - b) / scale)
    return worst


def translation_invariance_residual(u: SpaceTimeField, a: float, cyl: Cylinder,
                                    density: int = DEFAULT_DENSITY) -> dict:
    """Relative change of G, L, O (and, for information, U) under u -> u - a."""
    base = compute_quantities(u, None, cyl, density=density)
    shifted = compute_quantities(u - a, None, cyl, density=density)
    out = {}
    for key in ("G", "L", "O", "U"):
        x, y = getattr(base, key), getattr(shifted, key)
        out[key] = abs(y - x) / max(abs(x), np.finfo(float).eps)
    out["absolute"] = {k: abs(getattr(shifted, k) - getattr(base, k)) for k in ("G", "L", "O", "U")}
    return out


@dataclass
class Profile:
    """Table of quantities over centres x radii with per-centre sups."""

    rows: list
    p: float

    def by_center(self) -> dict:
        out: dict = {}
        for row in self.rows:
            out.setdefault((row.cyl.x0, row.cyl.t0), []).append(row)
        return out

    def sup_over_radii(self) -> dict:
        """Per centre: sup of U and L over tested radii and the smallest radius used."""
        out = {}
        for center, rows in self.by_center().items():
            ok = [q for q in rows if not q.error]
            out[center] = {
                "sup_U": max((q.U for q in ok), default=math.nan),
                "sup_L": max((q.L for q in ok), default=math.nan),
                "min_r": min((q.cyl.r for q in ok), default=math.nan),
            }
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(PROFILE_COLUMNS + ("error",))
        for q in self.rows:
            row = q.as_row()
            writer.writerow([repr(float(row[c])) if c != "clipped" else row[c] for c in PROFILE_COLUMNS]
                            + [q.error])
        return buf.getvalue()


def multiscale_profile(u: SpaceTimeField, f: SpaceTimeField | None, centers, radii, p: float = 3.0,
                       density: int = DEFAULT_DENSITY, workers: int = 1) -> Profile:
    """Quantities for every (centre, radius) pair; row errors are recorded, not raised."""
    radii = list(radii)
    if any(a < b for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be sorted in descending order")
    _check_p(p)
    jobs = [Cylinder(float(x0), float(t0), float(r)) for (x0, t0) in centers for r in radii]

    def run(cyl):
        try:
            return compute_quantities(u, f, cyl, p, density)
        except FieldError as exc:
            nan = math.nan
            return ScaleQuantities(cyl, p, nan, nan, nan, nan, nan, False, str(exc))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(c) for c in jobs]
    return Profile(rows, p)


def dyadic_radii(r_max: float, count: int, factor: float = 2.0) -> list:
    return [r_max / factor ** i for i in range(count)]
