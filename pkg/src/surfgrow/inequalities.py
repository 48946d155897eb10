"""Numerical checks of the weak form, the local energy inequality and the
interpolation, Poincare and forcing-decay estimates.

Every check returns an :class:`InequalityReport`.  Inequalities whose constant
is unspecified are judged by the empirical ratio lhs/rhs against a cap; the
ratio itself is the reported "empirical constant".
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field, asdict

import numpy as np
from numpy.polynomial import Polynomial

from . import constants
from .field import (DEFAULT_DENSITY, Cylinder, FieldError, SpaceTimeField, ball_nodes)
from .quantities import compute_quantities


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    tolerance: float = 0.0
    passed: bool = True
    tags: list = dc_field(default_factory=list)
    details: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.lhs) and math.isfinite(self.rhs)):
            raise ValueError(f"{self.name}: lhs and rhs must be finite")

    @property
    def residual(self) -> float:
        return self.rhs - self.lhs

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0 else math.inf

    def to_record(self) -> dict:
        d = asdict(self)
        d["residual"] = self.residual
        d["ratio"] = self.ratio
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, default=float)


def summary_table(reports) -> str:
    lines = [f"{'name':<28} {'lhs':>13} {'rhs':>13} {'ratio':>11} {'tol':>10}  pass"]
    for r in reports:
        ratio = f"{r.ratio:11.4e}" if r.rhs > 0 or r.lhs == 0 else f"{'-':>11}"
        lines.append(f"{r.name:<28} {r.lhs:13.6e} {r.rhs:13.6e} {ratio} "
                     f"{r.tolerance:10.2e}  {'yes' if r.passed else 'NO'}")
    return "\n".join(lines)


def _ratio_report(name, lhs, rhs, cap=constants.C_CAP, tags=(), **details) -> InequalityReport:
    rep = InequalityReport(name, float(lhs), float(rhs), tolerance=cap, tags=list(tags), details=details)
    rep.passed = rep.ratio <= cap
    return rep


# cutoff -----------------------------------------------------------------------

_CHI = Polynomial([1.0, 0.0, -1.0]) ** 5
_CHI_DERIVS = [_CHI.deriv(k) for k in range(5)]
_CHI_MASS = float(_CHI.integ()(1.0) - _CHI.integ()(-1.0))


def _chi(s, k=0):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) <= 1.0, _CHI_DERIVS[k](s), 0.0)


@dataclass(frozen=True)
class CutoffSpec:
    """Test function phi(x, t) = chi((x - x0)/r) chi((t - t0)/r^4), chi(s) = (1 - s^2)^5."""

    x0: float
    t0: float
    r: float

    @property
    def tau(self) -> float:
        return self.r ** 4

    @property
    def support(self) -> tuple:
        return (self.x0 - self.r, self.x0 + self.r), (self.t0 - self.tau, self.t0 + self.tau)

    def _st(self, x, t):
        return (np.asarray(x) - self.x0) / self.r, (np.asarray(t) - self.t0) / self.tau

    def phi(self, x, t, dx: int = 0, dt: int = 0):
        """Partial derivative d^dx/dx d^dt/dt of phi (dx <= 4, dt <= 1)."""
        s, q = self._st(x, t)
        return _chi(s, dx) * _chi(q, dt) / (self.r ** dx * self.tau ** dt)

    def spatial_mass(self, t) -> float:
        """int phi(x, t) dx in closed form."""
        _, q = self._st(0.0, t)
        return float(self.r * _CHI_MASS * _chi(q))


# evaluation helpers -------------------------------------------------------------

def _window_values(field: SpaceTimeField | None, like: SpaceTimeField, x, a, b):
    nodes = like.window_nodes(a, b)
    if nodes.clipped:
        raise FieldError(f"time window ({a}, {b}) exceeds the trajectory")
    if field is None or field.is_zero:
        return np.zeros((nodes.times.size, x.size)), nodes
    return field.evaluate(x, field.window_nodes(a, b)), nodes


def _slice_values(field: SpaceTimeField, x, t):
    row = np.fft.rfft(field.slice_at(t))
    from .field import trig_interpolate
    return trig_interpolate(field.grid, row, x)


def _support_nodes(u: SpaceTimeField, phi: CutoffSpec, density: int):
    if 2 * phi.r > u.grid.period:
        raise FieldError("cutoff support escapes the periodic domain")
    return ball_nodes(u.grid, phi.x0, phi.r, density)


# checks -------------------------------------------------------------------

def weak_form_residual(u: SpaceTimeField, f: SpaceTimeField | None, phi: CutoffSpec,
                       s_prev: float, s: float, density: int = DEFAULT_DENSITY) -> float:
    """|int u phi |_{s'}^{s} - int_{s'}^{s} int (u phi_t - u_xx phi_xx - u_x^2 phi_xx + f phi)|."""
    if not s_prev < s:
        raise FieldError("need s' < s")
    x, w = _support_nodes(u, phi, density)
    uv, nodes = _window_values(u, u, x, s_prev, s)
    uxx, _ = _window_values(u.derivative(2), u, x, s_prev, s)
    ux, _ = _window_values(u.derivative(1), u, x, s_prev, s)
    fv, _ = _window_values(f, u, x, s_prev, s)
    T = nodes.times[:, None]
    X = x[None, :]
    integrand = (uv * phi.phi(X, T, dt=1) - (uxx + ux ** 2) * phi.phi(X, T, dx=2) + fv * phi.phi(X, T))
    rhs = nodes.weights @ (integrand @ w)
    lhs = (_slice_values(u, x, s) * phi.phi(x, s)) @ w - (_slice_values(u, x, s_prev) * phi.phi(x, s_prev)) @ w
    return float(abs(lhs - rhs))


def _energy_terms(u, f, phi, t, a, density):
    x, w = _support_nodes(u, phi, density)
    start = phi.t0 - phi.tau
    if not start < t:
        raise FieldError("evaluation time must lie after the start of the cutoff support")
    uv, nodes = _window_values(u, u, x, start, t)
    ux, _ = _window_values(u.derivative(1), u, x, start, t)
    uxx, _ = _window_values(u.derivative(2), u, x, start, t)
    fv, _ = _window_values(f, u, x, start, t)
    T = nodes.times[:, None]
    X = x[None, :]
    p0 = phi.phi(X, T)
    p1 = phi.phi(X, T, dx=1)
    p2 = phi.phi(X, T, dx=2)
    p4 = phi.phi(X, T, dx=4)
    pt = phi.phi(X, T, dt=1)

    def integrate(values):
        return float(nodes.weights @ (values @ w))

    # (u - a)^2 = u^2 - 2 a u + a^2; the a^2 part only involves phi and is done exactly below
    u_now = _slice_values(u, x, t)
    lhs_terms = {
        "energy": float((0.5 * (u_now ** 2 - 2 * a * u_now) * phi.phi(x, t)) @ w),
        "dissipation": integrate(uxx ** 2 * p0),
    }
    rhs_terms = {
        "cutoff": integrate(0.5 * (pt - p4) * (uv ** 2 - 2 * a * uv)),
        "gradient": integrate(2 * ux ** 2 * p2),
        "cubic": integrate(-5.0 / 3.0 * ux ** 3 * p1),
        "transport": integrate(-(ux ** 2) * (uv - a) * p2),
        "forcing": integrate(fv * (uv - a) * p0),
    }
    if a:
        # int phi(t) dx and int int (phi_t - phi_xxxx) agree exactly: phi vanishes at the support start
        constant = 0.5 * a * a * phi.spatial_mass(t)
        lhs_terms["energy"] += constant
        rhs_terms["cutoff"] += constant
    return lhs_terms, rhs_terms


def local_energy_check(u: SpaceTimeField, f: SpaceTimeField | None, phi: CutoffSpec, t: float,
                       a: float = 0.0, identity: bool = True,
                       density: int = DEFAULT_DENSITY) -> InequalityReport:
    """Local energy inequality at time ``t``; ``a != 0`` gives the shifted form with u - a.

    For smooth solutions the inequality is an identity, so with ``identity``
    the pass criterion is |rhs - lhs| <= tol; otherwise rhs - lhs >= -tol.
    """
    lhs_terms, rhs_terms = _energy_terms(u, f, phi, t, a, density)
    lhs = sum(lhs_terms.values())
    rhs = sum(rhs_terms.values())
    scale = sum(abs(v) for v in lhs_terms.values()) + sum(abs(v) for v in rhs_terms.values())
    name = "local_energy_shifted" if a else "local_energy"
    tol = constants.tolerance(name, u.times.dt, phi.tau, scale)
    rep = InequalityReport(name, lhs, rhs, tolerance=tol,
                           details={"a": a, "t": t, "lhs_terms": lhs_terms, "rhs_terms": rhs_terms})
    rep.passed = abs(rep.residual) <= tol if identity else rep.residual >= -tol
    return rep


def _unit_cylinder_integrals(u, f, p, center, density):
    x0, t0 = center
    q1 = Cylinder(x0, t0, 1.0)
    from .field import cylinder_integral
    cubes = (cylinder_integral(u, q1, lambda v: np.abs(v) ** 3, density)[0]
             + cylinder_integral(u.derivative(1), q1, lambda v: np.abs(v) ** 3, density)[0])
    if f is None or f.is_zero:
        forcing = 0.0
    else:
        forcing = cylinder_integral(f, q1, lambda v: np.abs(v) ** p, density)[0] ** (3 / (2 * p))
    return cubes, forcing


def local_energy_estimate_check(u: SpaceTimeField, f: SpaceTimeField | None, p: float = 3.0,
                                center=(0.0, 0.0), cap: float = constants.C_CAP,
                                solution: bool = True, density: int = DEFAULT_DENSITY) -> InequalityReport:
    """sup_t int_{B_1/2} u^2 + int_{Q_1/2} u_xx^2  versus  int_{Q_1} (|u|^3 + |u_x|^3) + ||f||_p^{3/2}."""
    from .field import cylinder_integral
    x0, t0 = center
    half = Cylinder(x0, t0, 0.5)
    x, w = ball_nodes(u.grid, x0, 0.5, density)
    vals = u.evaluate(x, u.time_nodes(half))
    sup_energy = float(np.max((vals ** 2) @ w))
    dissipation = cylinder_integral(u.derivative(2), half, lambda v: v ** 2, density)[0]
    lhs = sup_energy + dissipation
    cubes, forcing = _unit_cylinder_integrals(u, f, p, center, density)
    rhs = cubes + forcing
    if rhs == 0 and lhs > 0:
        raise FieldError("local energy estimate: zero right-hand side with positive energy")
    tags = [] if solution else ["non-solution"]
    return _ratio_report("local_energy_estimate", lhs, rhs, cap, tags, p=p)


def l103_bounds_check(u: SpaceTimeField, f: SpaceTimeField | None, p: float = 3.0,
                      center=(0.0, 0.0), cap: float = constants.C_CAP,
                      density: int = DEFAULT_DENSITY) -> InequalityReport:
    """int_{Q_1/2} (|u|^{10/3} + |u_x|^{10/3}) after normalising the hypothesis sum to 1.

    The normalisation rescales (u, f) -> (c u, c^2 f), under which the
    hypothesis sum is homogeneous of degree 3, so c = H^{-1/3}.
    """
    from .field import cylinder_integral
    cubes, forcing = _unit_cylinder_integrals(u, f, p, center, density)
    H = cubes + forcing
    if H == 0:
        return InequalityReport("l103_bounds", 0.0, cap, tolerance=cap, passed=True, tags=["degenerate"])
    c = H ** (-1 / 3)
    half = Cylinder(center[0], center[1], 0.5)
    e = 10 / 3
    raw = (cylinder_integral(u, half, lambda v: np.abs(v) ** e, density)[0]
           + cylinder_integral(u.derivative(1), half, lambda v: np.abs(v) ** e, density)[0])
    value = c ** e * raw
    rep = InequalityReport("l103_bounds", value, cap, tolerance=cap, details={"hypothesis_sum": H, "scale": c})
    rep.passed = value <= cap
    return rep


def parabolic_poincare_check(u: SpaceTimeField, f: SpaceTimeField | None, cyl: Cylinder,
                             vartheta: float = 1.0, p: float = 3.0, cap: float = constants.C_CAP,
                             density: int = DEFAULT_DENSITY) -> InequalityReport:
    """avg_{Q_r/2} |u - u_{Q_r/2}|^3  versus  G_r^3 + vartheta G_r^6 + F_r^3."""
    if not 0 <= vartheta <= 1:
        raise ValueError("vartheta must lie in [0, 1]")
    from .field import cylinder_average
    half = cyl.scaled(0.5)
    mean = cylinder_average(u, half, 1.0, absolute=False, density=density)
    lhs = cylinder_average(u - mean, half, 3.0, density=density)
    if lhs <= (64 * np.finfo(float).eps * abs(mean)) ** 3:
        lhs = 0.0  # round-off of the mean subtraction
    q = compute_quantities(u, f, cyl, p, density)
    terms = {"gradient": q.G ** 3, "nonlinear": vartheta * q.G ** 6, "forcing": q.F ** 3}
    return _ratio_report("parabolic_poincare", lhs, sum(terms.values()), cap, terms=terms, vartheta=vartheta)


def interpolation_checks(u: SpaceTimeField, cyl: Cylinder, cap: float = constants.C_CAP,
                         density: int = DEFAULT_DENSITY) -> list:
    """Ratios for the three interpolation inequalities at one cylinder."""
    from .field import cylinder_average
    q = compute_quantities(u, None, cyl, density=density)
    U, G, O, L = q.U, q.G, q.O, q.L
    cube = cylinder_average(u, cyl, 3.0, density=density)
    full_torus = 2 * cyl.r >= u.grid.period * (1 - 1e-12)
    return [
        _ratio_report("interp_cubic_U_G", cube, U ** (9 / 7) * G ** (3 / 7) + U ** 1.5, cap),
        _ratio_report("interp_G_U_L", G, U ** (5 / 24) * L ** (7 / 24) + U ** 0.5, cap),
        _ratio_report("interp_G_O_L", G, O ** (5 / 24) * L ** (7 / 24), cap,
                      tags=[] if full_torus else ["informational"]),
    ]


def eta_p(p: float) -> float:
    """4^{-2p/(2p-3)}, the largest ratio for which F decays by 1/16 per step."""
    if not p > 1.5:
        raise ValueError(f"eta_p needs p > 3/2, got {p}")
    return 4.0 ** (-2 * p / (2 * p - 3))


def f_decay_check(f: SpaceTimeField | None, p: float, r: float, K: int, center=(0.0, 0.0),
                  density: int = DEFAULT_DENSITY, like: SpaceTimeField | None = None) -> list:
    """F at scales r^k, k = 0..K, against the bound F_1 / 16^k."""
    eta = eta_p(p)
    if not 0 < r <= eta:
        raise ValueError(f"r must lie in (0, eta_p = {eta}]")
    reports = []
    base = None
    for k in range(K + 1):
        cyl = Cylinder(center[0], center[1], r ** k)
        if f is None or f.is_zero:
            value = 0.0
        else:
            value = compute_quantities(f, f, cyl, p, density).F
        if base is None:
            base = value
        bound = base / 16 ** k
        rep = InequalityReport(f"f_decay_k{k}", value, bound, tolerance=1e-12 * max(base, 1e-300),
                               details={"k": k, "scale": r ** k})
        rep.passed = value <= bound * (1 + 1e-12) + 1e-300
        reports.append(rep)
    return reports


def linf_estimate_check(v: SpaceTimeField, r: float, center=(0.0, 0.0), cap: float = constants.C_CAP,
                        density: int = DEFAULT_DENSITY) -> InequalityReport:
    """sup_{Q_r/2} |v_x|  versus  ||v_x||_{L^2(Q_r)} + ||v||_{L^2(Q_r)}."""
    from .field import cylinder_integral
    cyl = Cylinder(center[0], center[1], r)
    half = cyl.scaled(0.5)
    vx = v.derivative(1)
    x, _ = ball_nodes(v.grid, half.x0, half.r, density)
    x = np.concatenate([x, [half.x0 - half.r, half.x0 + half.r]])
    sup = float(np.max(np.abs(vx.evaluate(x, vx.time_nodes(half)))))
    l2 = lambda g: math.sqrt(cylinder_integral(g, cyl, lambda z: z ** 2, density)[0])
    return _ratio_report("linf_estimate", sup, l2(vx) + l2(v), cap, r=r)
