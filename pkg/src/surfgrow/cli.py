"""Command-line batch runs: simulate, quantities, verify, singular-set, convergence.

Usage::

    surfgrow <command> [--config FILE] [--output DIR] [--section.key=value ...]

Config files are flat ``key = value`` text; any key can be overridden on the
command line.  Outputs go to ``--output``, else ``output.dir``, else
``$SURFGROW_OUTPUT/<command>-<config hash>``.  Exit codes: 0 pass, 1 hard
failure (blow-up, failed check), 2 invalid config.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import constants
from .field import Cylinder, FieldError, SpaceTimeField, TimeGrid, TorusGrid
from .fixtures import MANUFACTURED, linear_chart, power_profile, random_bandlimited
from .inequalities import (CutoffSpec, InequalityReport, eta_p, f_decay_check, interpolation_checks,
                           l103_bounds_check, local_energy_check, local_energy_estimate_check,
                           parabolic_poincare_check, summary_table, weak_form_residual)
from .quantities import multiscale_profile
from .regularity import (RegularityConfig, biparabolic_cover, decay_trace, detect_singular_candidates,
                         solver_refiner, verdicts_csv)
from .solver import BlowUpError, ForcingSpec, RunRecord, SolverConfig, integrate_sgm
from .storage import (ConfigError, RunConfig, read_field, write_columns, write_field, write_records,
                      write_table)

COMMANDS = ("simulate", "quantities", "verify", "singular-set", "convergence")
OUTPUT_ENV = "SURFGROW_OUTPUT"
STEADY_PRESETS = ("zero", "constant", "sin-profile", "linear-chart", "power-profile")
DYNAMIC_PRESETS = tuple(MANUFACTURED)


class HardFailure(RuntimeError):
    """A run that completed but must exit with status 1."""


# building blocks from config ----------------------------------------------------

def _guard(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigError:
        raise
    except (ValueError, FieldError) as exc:
        raise ConfigError(str(exc)) from None


def solver_config(cfg: RunConfig) -> SolverConfig:
    grid = _guard(TorusGrid, cfg.integer("solver.n_points"), cfg.number("solver.period"))
    return _guard(SolverConfig, grid=grid, dt=cfg.number("solver.dt"), t_start=cfg.number("solver.t_start"),
                  t_end=cfg.number("solver.t_end"), dealias=cfg.flag("solver.dealias"),
                  scheme=cfg.get("solver.scheme"), store_stride=cfg.integer("solver.store_stride"))


def regularity_config(cfg: RunConfig) -> RegularityConfig:
    return _guard(RegularityConfig, delta0=cfg.number("regularity.delta0"), lam=cfg.number("regularity.lambda"),
                  theta=cfg.number("regularity.theta"), p=cfg.number("quantities.p"),
                  delta1_star=cfg.number("regularity.delta1_star"),
                  delta2_star=cfg.number("regularity.delta2_star"),
                  radii=tuple(cfg.numbers("quantities.radii")))


def _preset(cfg: RunConfig) -> str:
    name = cfg.get("field.preset")
    if name not in STEADY_PRESETS + DYNAMIC_PRESETS + ("random",):
        raise ConfigError(f"field.preset: unknown preset {name!r}")
    return name


def forcing_spec(cfg: RunConfig, preset: str | None = None) -> ForcingSpec:
    kind = cfg.get("forcing.preset")
    amp = cfg.number("forcing.amplitude")
    preset = preset if preset is not None else _preset(cfg)
    if kind == "auto":
        if preset in MANUFACTURED:
            return MANUFACTURED[preset][1](cfg.number("field.amplitude"))
        return ForcingSpec.zero()
    if kind == "zero":
        return ForcingSpec.zero()
    if kind == "constant":
        return ForcingSpec.analytic(lambda x, t: amp + 0 * x, label=f"constant {amp}")
    if kind == "cosine":
        return ForcingSpec.analytic(lambda x, t: amp * np.cos(x), label=f"cosine {amp}")
    raise ConfigError(f"forcing.preset: unknown forcing {kind!r}")


def initial_profile(cfg: RunConfig, grid: TorusGrid, t0: float) -> np.ndarray:
    preset = _preset(cfg)
    A = cfg.number("field.amplitude")
    if preset in MANUFACTURED:
        return MANUFACTURED[preset][0](A).u(grid.x, t0)
    return _steady_profile(cfg, preset, grid)


def _steady_profile(cfg, preset, grid):
    A = cfg.number("field.amplitude")
    if preset == "zero":
        return np.zeros(grid.n_points)
    if preset == "constant":
        return np.full(grid.n_points, A)
    if preset == "sin-profile":
        return A * np.sin(grid.x)
    if preset == "linear-chart":
        return A * linear_chart(grid)
    if preset == "power-profile":
        return A * power_profile(grid, cfg.number("field.exponent"))
    if preset == "random":
        rng = np.random.default_rng(cfg.integer("seed"))
        return random_bandlimited(grid, TimeGrid(0.0, 1.0, 1), rng, amplitude=A).samples[0]
    raise ConfigError(f"field.preset {preset!r} has no initial profile")


def load_fields(cfg: RunConfig):
    """(u, f, forcing spec, note) from ``field.input`` or the preset."""
    path = cfg.get("field.input")
    if path:
        try:
            u, meta = read_field(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"field.input: {exc}") from None
        preset = meta.get("preset", "")
        if cfg.get("forcing.preset") == "auto" and preset in MANUFACTURED:
            forcing = MANUFACTURED[preset][1](float(meta.get("amplitude", 1.0)))
        else:
            forcing = forcing_spec(cfg, preset=preset or "zero")
        return u, _forcing_field(forcing, u), forcing, "input"
    preset = _preset(cfg)
    scfg = solver_config(cfg)
    forcing = forcing_spec(cfg)
    if preset in STEADY_PRESETS:
        u = SpaceTimeField.steady(_steady_profile(cfg, preset, scfg.grid), scfg.grid,
                                  scfg.t_start, scfg.t_end, n_steps=scfg.n_steps)
        return u, _forcing_field(forcing, u), forcing, "steady fixture"
    if preset == "random":
        rng = np.random.default_rng(cfg.integer("seed"))
        u = random_bandlimited(scfg.grid, scfg.output_times, rng, amplitude=cfg.number("field.amplitude"))
        return u, _forcing_field(forcing, u), forcing, "random non-solution"
    u = integrate_sgm(initial_profile(cfg, scfg.grid, scfg.t_start), forcing, scfg)
    return u, _forcing_field(forcing, u), forcing, "simulated"


def _forcing_field(forcing: ForcingSpec, u: SpaceTimeField):
    return None if forcing.is_zero else forcing.to_field(u.grid, u.times)


def output_dir(cfg: RunConfig, override: str | None) -> Path:
    if override:
        out = Path(override)
    elif cfg.get("output.dir"):
        out = Path(cfg.get("output.dir"))
    else:
        out = Path(os.environ.get(OUTPUT_ENV, "surfgrow-runs")) / f"{cfg.command}-{cfg.hash}"
    out.mkdir(parents=True, exist_ok=True)
    return out


# commands ------------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    scfg = solver_config(cfg)
    preset = _preset(cfg)
    forcing = forcing_spec(cfg)
    record = RunRecord(scfg.to_dict(), extra={"preset": preset, "amplitude": cfg.number("field.amplitude")})
    u0 = initial_profile(cfg, scfg.grid, scfg.t_start)
    status = 0
    try:
        u = integrate_sgm(u0, forcing, scfg, record)
    except BlowUpError as exc:
        record.extra["diagnostic"] = str(exc)
        status = 1
        u = None
    rec = asdict(record)
    rec.pop("wall_time")
    if u is not None:
        write_field(out / "trajectory.field", u, {"preset": preset, "amplitude": cfg.number("field.amplitude")},
                    header=_stamp(cfg))
        if forcing.kind == "manufactured":
            exact = forcing.exact.sample(u.grid, u.times)
            err = np.max(np.abs(u.samples - exact.samples), axis=1)
            rec["extra"]["max_error"] = float(err.max())
            rec["extra"]["final_error"] = float(err[-1])
            write_columns(out / "error_vs_time.dat", cfg, ("t", "max_error"), u.times.times, err)
        write_columns(out / "max_abs.dat", cfg, ("t", "max_abs_u"), u.times.times,
                      np.max(np.abs(u.samples), axis=1))
    write_records(out / "run.jsonl", cfg, [rec])
    return status


def cmd_quantities(cfg: RunConfig, out: Path) -> int:
    u, f, _, note = load_fields(cfg)
    centers = cfg.points("quantities.centers")
    radii = sorted(cfg.numbers("quantities.radii"), reverse=True)
    if not centers or not radii:
        raise ConfigError("quantities.centers and quantities.radii must be non-empty")
    prof = _guard(multiscale_profile, u, f, centers, radii, cfg.number("quantities.p"),
                  cfg.integer("quantities.density"), cfg.integer("quantities.workers"))
    write_table(out / "profile.csv", cfg, f"# source: {note}\n" + prof.to_csv())
    first = [q for q in prof.rows if (q.cyl.x0, q.cyl.t0) == centers[0]]
    write_columns(out / "G_vs_r.dat", cfg, ("r", "G"), [q.cyl.r for q in first], [q.G for q in first])
    return 0


def verify_reports(u, f, cfg: RunConfig, solution: bool = True) -> list:
    (x0, t0), = cfg.points("verify.center")[:1] or [(0.0, 0.0)]
    r = cfg.number("verify.radius")
    t = cfg.number("verify.time")
    p = cfg.number("quantities.p")
    cap = cfg.number("verify.cap")
    phi = CutoffSpec(x0, t0, r)
    reports = []
    start = t0 - phi.tau
    defect = weak_form_residual(u, f, phi, start, t)
    tol = constants.tolerance("weak_form", u.times.dt, phi.tau, max(1.0, float(np.max(np.abs(u.samples)))))
    rep = InequalityReport("weak_form", defect, 0.0, tolerance=tol, details={"s_prev": start, "s": t})
    rep.passed = defect <= tol
    reports.append(rep)
    reports.append(local_energy_check(u, f, phi, t))
    reports.append(local_energy_check(u, f, phi, t, a=cfg.number("verify.shift")))
    reports.append(local_energy_estimate_check(u, f, p, (x0, t0), cap, solution=solution))
    reports.append(l103_bounds_check(u, f, p, (x0, t0), cap))
    half = Cylinder(x0, t0, 0.5 * r)
    reports.append(parabolic_poincare_check(u, f, half, 1.0, p, cap))
    reports += interpolation_checks(u, half, cap)
    if f is not None:
        reports += f_decay_check(f, p, eta_p(p), 2, (x0, t0))
    if not solution:
        for rep in reports:
            rep.tags.append("non-solution")
    return reports


def hard_failures(reports) -> list:
    return [r for r in reports if not r.passed and "informational" not in r.tags]


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    u, f, _, note = load_fields(cfg)
    solution = note in ("simulated", "input") or not np.any(u.samples)
    reports = verify_reports(u, f, cfg, solution=solution)
    write_records(out / "reports.jsonl", cfg, [r.to_record() for r in reports])
    write_table(out / "summary.txt", cfg, summary_table(reports) + "\n")
    return 1 if hard_failures(reports) else 0


def _segment(n=10_000):
    return np.c_[np.linspace(0.0, 1.0, n), np.zeros(n)]


def cmd_singular_set(cfg: RunConfig, out: Path) -> int:
    rcfg = regularity_config(cfg)
    which = cfg.get("cover.points")
    if which not in ("candidates", "segment", "time-segment", "point"):
        raise ConfigError(f"cover.points: unknown point set {which!r}")
    records = []
    if which == "candidates":
        u, f, forcing, note = load_fields(cfg)
        centers = cfg.points("quantities.centers")
        radii = sorted(cfg.numbers("quantities.radii"), reverse=True)
        prof = _guard(multiscale_profile, u, f, centers, radii, rcfg.p, cfg.integer("quantities.density"),
                      cfg.integer("quantities.workers"))
        found = detect_singular_candidates(prof, rcfg)
        write_table(out / "verdicts.csv", cfg, f"# {rcfg.stamp}\n" + verdicts_csv(found["verdicts"]))
        points = np.array(found["candidates"], dtype=float).reshape(-1, 2)
        center = centers[0]
        refine = solver_refiner(u, forcing, center) if cfg.flag("regularity.refine") and note == "simulated" else None
        trace = decay_trace(u, f, rcfg, center, K=cfg.integer("regularity.decay_k"), refine=refine)
        write_table(out / "decay_trace.csv", cfg, f"# {rcfg.stamp}\n" + trace.to_csv())
        write_columns(out / "decay.dat", cfg, ("k", "G"), [r.k for r in trace.rows], [r.G for r in trace.rows])
        records.append({"decay_slope": trace.slope, "truncated_at": trace.truncated_at,
                        "candidates": len(points), "alpha_method": rcfg.alpha})
    elif which == "segment":
        points = _segment()
    elif which == "time-segment":
        points = _segment()[:, ::-1]
    else:
        points = np.zeros((1, 2))
    cover = biparabolic_cover(points, cfg.number("cover.delta_cap"), tuple(cfg.numbers("cover.exponents")))
    records = cover.records() + records
    write_records(out / "cover.jsonl", cfg, records)
    return 0


def cmd_convergence(cfg: RunConfig, out: Path) -> int:
    preset = _preset(cfg)
    if preset not in MANUFACTURED:
        raise ConfigError(f"convergence needs a manufactured preset, got {preset!r}")
    dts = cfg.numbers("convergence.dts")
    ns = [int(n) for n in cfg.numbers("convergence.n_points")]
    if len(dts) < 2:
        raise ConfigError("convergence.dts needs at least two rows")
    t_end = cfg.number("convergence.t_end")
    A = cfg.number("field.amplitude")
    exact_fn, forcing_fn = MANUFACTURED[preset]
    exact, forcing = exact_fn(A), forcing_fn(A)
    t0 = cfg.number("solver.t_start")

    def error(n, dt):
        grid = _guard(TorusGrid, n, cfg.number("solver.period"))
        scfg = _guard(SolverConfig, grid=grid, dt=dt, t_start=t0, t_end=t_end, dealias=cfg.flag("solver.dealias"),
                      scheme=cfg.get("solver.scheme"))
        u = integrate_sgm(exact.u(grid.x, t0), forcing, scfg)
        return float(np.max(np.abs(u.samples[-1] - exact.u(grid.x, u.times.t_end))))

    rows = ["kind,n_points,dt,error,order"]
    errs = [error(cfg.integer("solver.n_points"), dt) for dt in dts]
    for i, (dt, e) in enumerate(zip(dts, errs)):
        order = "" if i == 0 else repr(_order(errs[i - 1], e, dts[i - 1] / dt))
        rows.append(f"dt,{cfg.integer('solver.n_points')},{dt!r},{e!r},{order}")
    for n in ns:
        rows.append(f"n,{n},{cfg.number('solver.dt')!r},{error(n, cfg.number('solver.dt'))!r},")
    write_table(out / "order.csv", cfg, "\n".join(rows) + "\n")
    write_columns(out / "error_vs_dt.dat", cfg, ("dt", "error"), dts, errs)
    return 0


def _order(e_coarse, e_fine, ratio):
    if e_coarse <= 0 or e_fine <= 0:
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(ratio)


def _stamp(cfg):
    from .storage import stamp_lines
    return stamp_lines(cfg)


HANDLERS = {
    "simulate": cmd_simulate,
    "quantities": cmd_quantities,
    "verify": cmd_verify,
    "singular-set": cmd_singular_set,
    "convergence": cmd_convergence,
}


# entry point ----------------------------------------------------------------------

def parse_args(argv) -> tuple[RunConfig, str | None]:
    parser = argparse.ArgumentParser(prog="surfgrow", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--output", help="output directory")
    args, rest = parser.parse_known_args(argv)
    values = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        values.update(RunConfig.from_text(text).values)
    i = 0
    while i < len(rest):
        item = rest[i]
        if not item.startswith("--"):
            raise ConfigError(f"unexpected argument {item!r}")
        if "=" in item:
            key, val = item[2:].split("=", 1)
        elif i + 1 < len(rest):
            key, val = item[2:], rest[i + 1]
            i += 1
        else:
            raise ConfigError(f"missing value for {item}")
        values[key] = val
        i += 1
    return RunConfig(args.command, values), args.output


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, override = parse_args(argv)
        out = output_dir(cfg, override)
        (out / "config.txt").write_text(cfg.to_text())
        status = HANDLERS[cfg.command](cfg, out)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except (BlowUpError, HardFailure) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    print(f"{cfg.command}: wrote {out} (status {status})")
    return status


if __name__ == "__main__":
    sys.exit(main())
