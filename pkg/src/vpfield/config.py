"""Run configuration: a flat ``section.key = value`` text format.

Lines are ``key = value`` with ``#`` comments; keys are dotted per section
(grid, kernel, conv, profile, solver, picard, norms, diagnostics, output,
plus top-level seed/threads).  Lists are comma separated; scalar entries
broadcast across axes where a per-axis tuple is expected.  Parsing reports
*all* problems at once: unknown keys (with the nearest valid name), type
errors, and constraint violations, each tagged with its line.
"""

import difflib
import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import ParseError, ValidationError
from .grid import DEFAULT_NODE_BUDGET, GridConfig, make_grid
from .interaction import InteractionKernel
from .profiles import (GaussianProfile, RandomSmoothProfile, SmoothBallProfile,
                       ZeroProfile)
from .solver import SolverConfig

# key -> (type tag, default).  Type tags: int, float, str, floats (comma
# list), "radius" (the literal "auto" or a comma list).
SCHEMA = {
    "grid.d": ("int", 3),
    "grid.nx": ("floats", (8.0,)),
    "grid.nv": ("floats", (8.0,)),
    "grid.x_lo": ("floats", (-4.5,)),
    "grid.x_hi": ("floats", (4.5,)),
    "grid.v_lo": ("floats", (-4.0,)),
    "grid.v_hi": ("floats", (4.0,)),
    "grid.budget": ("int", DEFAULT_NODE_BUDGET),
    "kernel.kind": ("str", "newtonian"),
    "kernel.coupling": ("float", 1.0),
    "kernel.epsilon": ("float", 0.0),
    "conv.method": ("str", "fft"),
    "profile.kind": ("str", "gaussian"),
    "profile.center_x": ("floats", (0.0,)),
    "profile.center_v": ("floats", (0.0,)),
    "profile.sigma_x": ("floats", (1.0,)),
    "profile.sigma_v": ("floats", (0.8,)),
    "profile.amplitude": ("float", 1.0),
    "profile.wave_k_v": ("floats", (0.0,)),
    "profile.wave_k_x": ("floats", (0.0,)),
    "profile.radius": ("float", 1.0),
    "profile.width": ("float", 0.25),
    "profile.n_bumps": ("int", 3),
    "solver.dt": ("float", 0.05),
    "solver.t_end": ("float", 0.5),
    "solver.substeps": ("int", 4),
    "solver.mode": ("str", "pc1"),
    "solver.guard_factor": ("float", 25.0),
    "solver.store_every": ("int", 1),
    "solver.gauge_c": ("float", 0.0),
    "picard.n_max": ("int", 12),
    "picard.tol": ("float", 1e-6),
    "norms.kappa": ("float", 6.0),
    "norms.p": ("float", 2.0),
    "norms.radius_set": ("radius", (0.0,)),
    "diagnostics.p_list": ("floats", (2.5,)),
    "diagnostics.k_list": ("floats", (2.0,)),
    "output.dir": ("str", "out"),
    "output.csv": ("str", "run.csv"),
    "output.snapshot_every": ("int", 0),
    "seed": ("int", 0),
    "threads": ("int", 1),
}

_CHOICES = {
    "kernel.kind": ("newtonian", "mollified_newtonian", "zero"),
    "conv.method": ("fft", "direct"),
    "profile.kind": ("zero", "gaussian", "smooth_ball", "random_smooth"),
    "solver.mode": ("frozen", "pc1"),
}


@dataclass
class RunConfig:
    """Validated run description; build concrete objects via the methods."""

    values: dict = dfield(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def grid_config(self):
        d = self["grid.d"]

        def per_axis(key, cast=float):
            v = self[key]
            if len(v) == 1:
                return (cast(v[0]),) * d
            return tuple(cast(x) for x in v)

        return GridConfig(
            d=d, nx=per_axis("grid.nx", int), nv=per_axis("grid.nv", int),
            x_lo=per_axis("grid.x_lo"), x_hi=per_axis("grid.x_hi"),
            v_lo=per_axis("grid.v_lo"), v_hi=per_axis("grid.v_hi"),
            budget=self["grid.budget"])

    def grid(self):
        return make_grid(self.grid_config())

    def kernel(self):
        return InteractionKernel(self["kernel.kind"], self["grid.d"],
                                 self["kernel.coupling"],
                                 self["kernel.epsilon"])

    def profile(self):
        d = self["grid.d"]

        def per_axis(key):
            v = self[key]
            return (float(v[0]),) * d if len(v) == 1 else tuple(map(float, v))

        kind = self["profile.kind"]
        if kind == "zero":
            return ZeroProfile()
        if kind == "gaussian":
            return GaussianProfile(
                center_x=per_axis("profile.center_x"),
                center_v=per_axis("profile.center_v"),
                sigma_x=per_axis("profile.sigma_x"),
                sigma_v=per_axis("profile.sigma_v"),
                amplitude=self["profile.amplitude"],
                wave_k_v=per_axis("profile.wave_k_v"),
                wave_k_x=per_axis("profile.wave_k_x"))
        if kind == "smooth_ball":
            return SmoothBallProfile(center=(0.0,) * (2 * d),
                                     radius=self["profile.radius"],
                                     width=self["profile.width"],
                                     amplitude=self["profile.amplitude"])
        return RandomSmoothProfile(seed=self["seed"],
                                   n_bumps=self["profile.n_bumps"],
                                   amplitude=self["profile.amplitude"])

    def solver_config(self):
        return SolverConfig(
            dt=self["solver.dt"], t_end=self["solver.t_end"],
            substeps=self["solver.substeps"], mode=self["solver.mode"],
            conv_method=self["conv.method"], kappa=self["norms.kappa"],
            radius_set=self["norms.radius_set"],
            picard_n_max=self["picard.n_max"], picard_tol=self["picard.tol"],
            guard_factor=self["solver.guard_factor"],
            store_every=self["solver.store_every"],
            gauge_c=self["solver.gauge_c"])


def _parse_value(key, raw, line_no, violations):
    tag, _default = SCHEMA[key]
    raw = raw.strip()
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "str":
            return raw
        if tag == "floats":
            return tuple(float(p) for p in raw.split(",") if p.strip() != "")
        if tag == "radius":
            if raw == "auto":
                return "auto"
            return tuple(float(p) for p in raw.split(",") if p.strip() != "")
    except ValueError:
        violations.append(f"line {line_no}: {key}: cannot parse {raw!r} as {tag}")
        return _default
    violations.append(f"line {line_no}: {key}: unhandled type tag {tag}")
    return _default


def parse_config_text(text) -> RunConfig:
    """Parse and validate; raises ParseError on syntax, ValidationError with
    the full violation list otherwise."""
    values = {}
    lines_seen = {}
    violations = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"line {line_no}: expected 'key = value', got {line!r}",
                             line=line_no, column=len(line) - len(line.lstrip()) + 1)
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            near = difflib.get_close_matches(key, SCHEMA.keys(), n=1)
            hint = f" (did you mean {near[0]!r}?)" if near else ""
            violations.append(f"line {line_no}: unknown key {key!r}{hint}")
            continue
        if key in lines_seen:
            violations.append(
                f"line {line_no}: duplicate key {key!r} (first at line {lines_seen[key]})")
            continue
        lines_seen[key] = line_no
        values[key] = _parse_value(key, raw, line_no, violations)

    for key, (_tag, default) in SCHEMA.items():
        values.setdefault(key, default)

    _validate(values, lines_seen, violations)
    if violations:
        raise ValidationError(violations)
    return RunConfig(values=values)


def _where(lines_seen, key):
    return f"line {lines_seen[key]}: " if key in lines_seen else ""


def _validate(values, lines_seen, violations):
    def bad(key, msg):
        violations.append(f"{_where(lines_seen, key)}{key}: {msg}")

    for key, choices in _CHOICES.items():
        if values[key] not in choices:
            bad(key, f"must be one of {choices}, got {values[key]!r}")

    d = values["grid.d"]
    if d < 1:
        bad("grid.d", f"must be >= 1, got {d}")
    for axis_key in ("grid.nx", "grid.nv"):
        v = values[axis_key]
        if len(v) not in (1, max(d, 1)):
            bad(axis_key, f"needs 1 or {d} entries, got {len(v)}")
        if any(x < 4 or x != int(x) for x in v):
            bad(axis_key, f"entries must be integers >= 4, got {v}")
    for lo_key, hi_key in (("grid.x_lo", "grid.x_hi"), ("grid.v_lo", "grid.v_hi")):
        lo, hi = values[lo_key], values[hi_key]
        n = max(len(lo), len(hi))
        los = lo * n if len(lo) == 1 else lo
        his = hi * n if len(hi) == 1 else hi
        for a, b in zip(los, his):
            if not a < b:
                bad(lo_key, f"lo must be < hi, got [{a}, {b}]")
                break

    if values["kernel.kind"] == "mollified_newtonian" and values["kernel.epsilon"] <= 0:
        bad("kernel.epsilon", "mollified kernel needs epsilon > 0")
    if values["kernel.kind"] in ("newtonian", "mollified_newtonian") and d < 3:
        bad("kernel.kind", f"{values['kernel.kind']} requires grid.d >= 3")

    if values["solver.dt"] <= 0:
        bad("solver.dt", f"must be > 0, got {values['solver.dt']}")
    elif values["solver.t_end"] < values["solver.dt"] - 1e-15:
        bad("solver.t_end", "must be >= solver.dt")
    if values["solver.substeps"] < 1:
        bad("solver.substeps", "must be >= 1")
    if values["picard.n_max"] < 1:
        bad("picard.n_max", "must be >= 1")
    if values["norms.kappa"] < 2 * d:
        bad("norms.kappa", f"must be >= phase-space dimension {2 * d}")
    rs = values["norms.radius_set"]
    if rs != "auto":
        if not rs or rs[0] != 0.0:
            bad("norms.radius_set", "must start with 0")
        elif any(r < 0 for r in rs):
            bad("norms.radius_set", "radii must be >= 0")
    if values["threads"] < 1:
        bad("threads", "must be >= 1")
    if values["output.snapshot_every"] < 0:
        bad("output.snapshot_every", "must be >= 0")
    if values["solver.store_every"] < 1:
        bad("solver.store_every", "must be >= 1")


def parse_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def dump_config(cfg: RunConfig) -> str:
    """Canonical echo of a config; parse(dump(cfg)) reproduces cfg exactly."""
    out = []
    for key in SCHEMA:
        val = cfg.values[key]
        if isinstance(val, tuple):
            rendered = ", ".join(repr(float(v)) for v in val)
        else:
            rendered = str(val)
        out.append(f"{key} = {rendered}")
    return "\n".join(out) + "\n"


def default_config() -> RunConfig:
    return RunConfig(values={k: v for k, (_t, v) in SCHEMA.items()})


TEMPLATE = """\
# vpfield run configuration (key = value; '#' starts a comment)
# Grid: node-centered box in position (x) and velocity (v) space.
grid.d = 3
grid.nx = 8
grid.nv = 8
grid.x_lo = -4.5
grid.x_hi = 4.5
grid.v_lo = -4.0
grid.v_hi = 4.0

# Interaction: newtonian | mollified_newtonian | zero.
# coupling +1 is the attractive convention; epsilon only for mollified.
kernel.kind = newtonian
kernel.coupling = 1.0
kernel.epsilon = 0.0
conv.method = fft

# Initial datum: zero | gaussian | smooth_ball | random_smooth.
profile.kind = gaussian
profile.sigma_x = 1.0
profile.sigma_v = 0.8

# Transport stepper.
solver.dt = 0.05
solver.t_end = 0.5
solver.substeps = 4
solver.mode = pc1

# Fixed-point validation mode.
picard.n_max = 12
picard.tol = 1e-6

# Norm diagnostics: radius_set is 'auto' or a comma list starting at 0.
norms.kappa = 6.0
norms.radius_set = 0.0

output.dir = out
output.csv = run.csv
seed = 0
threads = 1
"""
