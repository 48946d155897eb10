"""Plain-text storage: trajectory files, flat run configs and stamped outputs.

Trajectory format::

    # surfgrow-field v1
    # meta {"preset": "...", ...}
    n_points period t_start dt n_steps
    <one row of n_points values per stored time>

Values are written with 17 significant digits, so a write/read round trip
is exact.  Every output file begins with comment lines carrying the config
hash and the constants ledger.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .constants import constants_ledger
from .field import SpaceTimeField, TimeGrid, TorusGrid

FIELD_MAGIC = "# surfgrow-field v1"


def write_field(path, u: SpaceTimeField, meta: dict | None = None, header: str = "") -> None:
    lines = [FIELD_MAGIC]
    if header:
        lines += header.rstrip("\n").split("\n")
    lines.append("# meta " + json.dumps(meta or {}, sort_keys=True))
    g, tg = u.grid, u.times
    lines.append(f"{g.n_points} {g.period!r} {tg.t_start!r} {tg.dt!r} {tg.n_steps}")
    body = "\n".join(" ".join(f"{v:.17g}" for v in row) for row in u.samples)
    Path(path).write_text("\n".join(lines) + "\n" + body + "\n")


def read_field(path) -> tuple[SpaceTimeField, dict]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != FIELD_MAGIC:
        raise ValueError(f"{path}: not a surfgrow field file")
    meta: dict = {}
    data = []
    for line in text[1:]:
        if line.startswith("# meta "):
            meta = json.loads(line[7:])
        elif line.startswith("#") or not line.strip():
            continue
        else:
            data.append(line)
    n, period, t0, dt, steps = data[0].split()
    grid = TorusGrid(int(n), float(period))
    times = TimeGrid(float(t0), float(dt), int(steps))
    samples = np.array([[float(v) for v in row.split()] for row in data[1:]])
    return SpaceTimeField(grid, times, samples), meta


# run configuration ---------------------------------------------------------------

DEFAULTS = {
    "seed": "0",
    "output.dir": "",
    "solver.n_points": "64",
    "solver.period": "2pi",
    "solver.dt": "1e-3",
    "solver.t_start": "-1",
    "solver.t_end": "1",
    "solver.scheme": "etdrk2",
    "solver.dealias": "true",
    "solver.store_stride": "1",
    "field.preset": "decaying-sine",
    "field.amplitude": "1",
    "field.exponent": "0.5",
    "field.input": "",
    "forcing.preset": "auto",
    "forcing.amplitude": "1",
    "quantities.centers": "0:0",
    "quantities.radii": "0.5,0.25,0.125",
    "quantities.p": "3",
    "quantities.density": "8",
    "quantities.workers": "1",
    "verify.center": "0:0",
    "verify.radius": "1",
    "verify.time": "0",
    "verify.shift": "5",
    "verify.cap": "100",
    "regularity.delta0": "0.1",
    "regularity.lambda": "0.03125",
    "regularity.theta": "0.03125",
    "regularity.delta1_star": "1",
    "regularity.delta2_star": "1",
    "regularity.decay_k": "2",
    "regularity.refine": "true",
    "cover.points": "candidates",
    "cover.delta_cap": "0.1",
    "cover.exponents": "1,2",
    "convergence.dts": "4e-3,2e-3,1e-3,5e-4",
    "convergence.n_points": "32,64,128",
    "convergence.t_end": "1",
}


class ConfigError(ValueError):
    """Invalid configuration (exit code 2)."""


@dataclass
class RunConfig:
    command: str
    values: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        merged = dict(DEFAULTS)
        for key, val in self.values.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key: {key}")
            merged[key] = str(val).strip()
        self.values = merged

    # text form
    def to_text(self) -> str:
        lines = [f"command = {self.command}"]
        lines += [f"{k} = {self.values[k]}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, command: str | None = None) -> "RunConfig":
        values = parse_pairs(text)
        cmd = values.pop("command", None)
        return cls(command or cmd or "", values)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    # typed access
    def get(self, key: str) -> str:
        return self.values[key]

    def number(self, key: str) -> float:
        raw = self.values[key].replace(" ", "")
        try:
            if raw.endswith("pi"):
                head = raw[:-2].rstrip("*")
                return (float(head) if head else 1.0) * math.pi
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None

    def integer(self, key: str) -> int:
        value = self.number(key)
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {self.values[key]!r}")
        return int(value)

    def flag(self, key: str) -> bool:
        raw = self.values[key].lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")

    def numbers(self, key: str) -> list:
        raw = self.values[key]
        try:
            return [float(v) for v in raw.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated numbers, got {raw!r}") from None

    def points(self, key: str) -> list:
        """'x:t,x:t' pairs."""
        out = []
        for item in self.values[key].split(","):
            if not item.strip():
                continue
            try:
                x, t = item.split(":")
                out.append((float(x), float(t)))
            except ValueError:
                raise ConfigError(f"{key}: expected x:t pairs, got {item!r}") from None
        return out


def parse_pairs(text: str) -> dict:
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, val = line.split("=", 1)
        values[key.strip()] = val.strip()
    return values


# stamped outputs --------------------------------------------------------------------

def stamp_lines(cfg: RunConfig) -> str:
    ledger = json.dumps(constants_ledger(), sort_keys=True)
    return f"# config_hash: {cfg.hash}\n# constants: {ledger}\n"


def write_table(path, cfg: RunConfig, body: str) -> None:
    Path(path).write_text(stamp_lines(cfg) + body)


def write_columns(path, cfg: RunConfig, names, a, b) -> None:
    """Plot-ready two-column file."""
    rows = "\n".join(f"{x:.17g} {y:.17g}" for x, y in zip(a, b))
    Path(path).write_text(stamp_lines(cfg) + f"# {names[0]} {names[1]}\n" + rows + "\n")


def write_records(path, cfg: RunConfig, records) -> None:
    """Line-delimited JSON; the first record holds the config hash and constants."""
    head = {"config_hash": cfg.hash, "constants": constants_ledger()}
    lines = [json.dumps(head, sort_keys=True)]
    lines += [json.dumps(r, sort_keys=True, default=_jsonable) for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)
