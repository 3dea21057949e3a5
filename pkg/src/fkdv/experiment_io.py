"""Experiment configuration, snapshots and result files.

Configs are INI files (``configparser``) with the sections ``experiment``,
``grid``, ``solver``, ``initial_data``, ``ladder``, ``verdict``, ``output``
and one ``window <name>`` section per diagnostic window.  Snapshots are a
fixed little-endian binary layout::

    b"FKDV"  uint16 version  uint32 n_points  f8 half_length  f8 alpha
    f8 t     uint64 step_count      n_points x f8 samples
"""
from __future__ import annotations

import configparser
import csv
import json
import math
import os
import re
import struct
import zlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .diagnostics import (
    DiagnosticWindow,
    GaussianProfile,
    OneSidedProfile,
    VerdictThresholds,
    accumulate_series,
    gamma_range,
    s_alpha,
    s_wellposed,
    window_violations,
)
from .errors import ConfigurationError, SnapshotFormatError, SnapshotLengthError
from .solver import SCHEMES, SolverConfig, SolverState
from .spectral import Field, Grid

MAGIC = b"FKDV"
VERSION = 1
_HEADER = struct.Struct("<4sHIdddQ")
OUTPUT_ENV = "FKDV_OUTPUT_DIR"


class ConfigParseError(ConfigurationError):
    """Malformed config text; carries 1-based ``line`` and ``column``."""

    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc, ["parse"])
        self.line = line
        self.column = column


@dataclass(frozen=True)
class SolverSettings:
    dt: float = 1e-3
    t_final: float = 2.0
    scheme: str = "etdrk4"
    dealias: bool = True


@dataclass(frozen=True)
class OutputSettings:
    cadence: int = 50
    directory: str = "results"
    formats: tuple = ("csv", "jsonl")


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float
    grid: Grid
    solver: SolverSettings = SolverSettings()
    initial_profile: object = field(default_factory=lambda: OneSidedProfile(gamma=1.3))
    mollifier_mu: float | None = None
    windows: tuple = ()
    ladder_m: int = 2
    thresholds: VerdictThresholds = VerdictThresholds()
    output: OutputSettings = OutputSettings()
    seed: int = 0
    name: str = "experiment"

    @property
    def s_alpha(self) -> float:
        return s_alpha(self.alpha)

    @property
    def s_wellposed(self) -> float:
        return s_wellposed(self.alpha)

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(alpha=self.alpha, dt=s.dt, t_final=s.t_final, dealias=s.dealias,
                            scheme=s.scheme, cadence=self.output.cadence)

    def rng(self, stream: str) -> np.random.Generator:
        """Independent generator for a named substream of the config seed."""
        return np.random.default_rng([self.seed, zlib.crc32(stream.encode())])

    def output_dir(self, override: str | None = None) -> Path:
        return Path(override or os.environ.get(OUTPUT_ENV) or self.output.directory)


def flagship_config(**changes) -> ExperimentConfig:
    """One-sided corner run: m=2, alpha=0.75, gamma=1.3, v=1, T=2, eps=0.5, b=2.5."""
    base = ExperimentConfig(
        alpha=0.75,
        grid=Grid(4096, 40 * math.pi),
        solver=SolverSettings(dt=1e-3, t_final=2.0),
        initial_profile=OneSidedProfile(gamma=1.3, x_s=-10.0),
        windows=(DiagnosticWindow(x0=0.0, epsilon=0.5, b=2.5, tau=2.5, v=1.0),),
        ladder_m=2,
        name="flagship",
    )
    return replace(base, **changes)


# ---------------------------------------------------------------------------
# parsing


_PI_RE = re.compile(r"^\s*([-+]?[0-9.eE+-]*)\s*\*?\s*pi\s*$")


def _locate(text: str, section: str, key: str | None):
    """1-based (line, column) of ``key`` inside ``[section]`` (or of the header)."""
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return i, raw.index("[") + 1
            continue
        if current == section and key is not None:
            m = re.match(r"\s*([^=:\s]+)\s*[=:]", raw)
            if m and m.group(1).lower() == key.lower():
                return i, raw.index("=") + 2 if "=" in raw else 1
    return None, None


class _Reader:
    def __init__(self, text, parser):
        self.text = text
        self.p = parser

    def _fail(self, section, key, what):
        line, col = _locate(self.text, section, key)
        raise ConfigParseError(f"[{section}] {key}: {what}", line, col)

    def get(self, section, key, conv, default=None):
        if not self.p.has_section(section) or not self.p.has_option(section, key):
            if default is None:
                line, col = _locate(self.text, section, None)
                raise ConfigParseError(f"missing required key [{section}] {key}", line, col)
            return default
        raw = self.p.get(section, key)
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            self._fail(section, key, f"cannot parse {raw!r} ({exc})")


def _float(raw: str) -> float:
    m = _PI_RE.match(raw)
    if m:
        coef = m.group(1)
        return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    return float(raw)


def _int(raw: str) -> int:
    v = float(raw)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _bool(raw: str) -> bool:
    r = raw.strip().lower()
    if r in ("1", "true", "yes", "on"):
        return True
    if r in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def _opt_float(raw: str):
    return None if raw.strip().lower() in ("", "none", "auto") else _float(raw)


def _formats(raw: str) -> tuple:
    return tuple(f.strip() for f in raw.split(",") if f.strip())


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text; every violated constraint is reported."""
    p = configparser.ConfigParser(interpolation=None)
    try:
        p.read_string(text)
    except configparser.MissingSectionHeaderError as exc:  # subclass of ParsingError
        raise ConfigParseError("text before the first [section]", exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        line, raw = exc.errors[0]
        raise ConfigParseError(f"malformed line {raw!r}", line, 1) from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigParseError(str(exc).splitlines()[0], line, 1 if line else None) from None
    r = _Reader(text, p)

    alpha = r.get("experiment", "alpha", _float)
    seed = r.get("experiment", "seed", _int, 0)
    name = r.get("experiment", "name", str, "experiment")
    n_points = r.get("grid", "n_points", _int)
    half_length = r.get("grid", "half_length", _float)
    solver = SolverSettings(
        dt=r.get("solver", "dt", _float),
        t_final=r.get("solver", "t_final", _float),
        scheme=r.get("solver", "scheme", str, "etdrk4"),
        dealias=r.get("solver", "dealias", _bool, True),
    )
    gen = r.get("initial_data", "generator", str, "one_sided")
    mu = r.get("initial_data", "mollifier_mu", _opt_float, "auto")
    mu = None if mu == "auto" else mu
    if gen == "one_sided":
        d = OneSidedProfile(gamma=1.3)
        kw = {}
        for f in fields(OneSidedProfile):
            conv = _bool if f.type in ("bool", bool) else _float
            kw[f.name] = r.get("initial_data", f.name, conv, getattr(d, f.name) if f.name != "gamma" else None)
        profile = OneSidedProfile(**kw)
    elif gen == "gaussian":
        d = GaussianProfile()
        profile = GaussianProfile(**{f.name: r.get("initial_data", f.name, _float, getattr(d, f.name))
                                     for f in fields(GaussianProfile)})
    else:
        r._fail("initial_data", "generator", f"unknown generator {gen!r}; use one_sided or gaussian")

    rules = []
    window_specs = []
    for sec in p.sections():
        if sec.split()[0] != "window":
            continue
        vals = {k: r.get(sec, k, _float, 0.0 if k in ("x0", "v") else None)
                for k in ("x0", "epsilon", "b", "tau", "v")}
        bad = window_violations(vals["epsilon"], vals["b"], vals["tau"], vals["v"])
        rules += [f"[{sec}] {b}" for b in bad]
        window_specs.append(vals)
    ladder_m = r.get("ladder", "m", _int, 2)
    dth = VerdictThresholds()
    thresholds = VerdictThresholds(
        kappa=r.get("verdict", "kappa", _float, dth.kappa),
        refinement_tol=r.get("verdict", "refinement_tol", _float, dth.refinement_tol),
        left_retention=r.get("verdict", "left_retention", _float, dth.left_retention),
        control_tol=r.get("verdict", "control_tol", _float, dth.control_tol),
        control=r.get("verdict", "control", _bool, dth.control),
    )
    dout = OutputSettings()
    output = OutputSettings(
        cadence=r.get("output", "cadence", _int, dout.cadence),
        directory=r.get("output", "directory", str, dout.directory),
        formats=r.get("output", "formats", _formats, dout.formats),
    )

    # collect every constraint violation before raising
    if not 0 < alpha < 1:
        rules.append("0 < α < 1")
    if n_points < 8 or n_points % 2:
        rules.append("n_points even ≥ 8")
    if not half_length > 0:
        rules.append("half_length > 0")
    if not solver.dt > 0:
        rules.append("dt > 0")
    elif not solver.t_final >= 0:
        rules.append("t_final ≥ 0")
    else:
        steps = solver.t_final / solver.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            rules.append("t_final multiple of dt")
    if solver.scheme not in SCHEMES:
        rules.append(f"scheme in {SCHEMES}")
    if ladder_m < 2:
        rules.append("m ≥ 2")
    if output.cadence < 1:
        rules.append("cadence ≥ 1")
    if not window_specs:
        rules.append("at least one [window ...] section")
    if isinstance(profile, OneSidedProfile) and profile.amplitude and 0 < alpha < 1:
        lo, hi = gamma_range(ladder_m, alpha)
        if not profile.gamma > lo:
            rules.append(f"γ + 1/2 > s_α = 2 - α/2 (γ > {lo:g})")
        if not profile.gamma <= hi:
            rules.append(f"γ ≤ m - 1/2 = {hi:g}")
        for w in window_specs:
            a, b = profile.support
            if not b < w["x0"]:
                rules.append(f"corner support right edge {b:g} < x0 = {w['x0']:g}")
        if half_length > 0 and (profile.support[0] <= -half_length or profile.support[1] >= half_length):
            rules.append("corner support inside the box")
    if mu is not None and n_points >= 8 and half_length > 0 and mu < 2 * (2 * half_length / n_points):
        rules.append("mollifier μ ≥ 2 dx")
    if rules:
        raise ConfigurationError("invalid configuration: " + "; ".join(rules), rules)

    windows = tuple(DiagnosticWindow(**w) for w in window_specs)
    return ExperimentConfig(alpha=alpha, grid=Grid(n_points, half_length), solver=solver,
                            initial_profile=profile, mollifier_mu=mu, windows=windows,
                            ladder_m=ladder_m, thresholds=thresholds, output=output,
                            seed=seed, name=name)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}", ["config file exists"])
    return parse_config(path.read_text())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(map(str, v))
    return str(v)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize to INI text; ``parse_config(dump_config(c)) == c``."""
    lines = ["[experiment]", f"name = {cfg.name}", f"alpha = {_fmt(cfg.alpha)}", f"seed = {cfg.seed}",
             f"# derived: s_alpha = {cfg.s_alpha!r}, s(alpha) = {cfg.s_wellposed!r}", "",
             "[grid]", f"n_points = {cfg.grid.n_points}", f"half_length = {_fmt(cfg.grid.half_length)}", "",
             "[solver]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.solver, f.name))}" for f in fields(SolverSettings)]
    lines += ["", "[initial_data]"]
    prof = cfg.initial_profile
    if isinstance(prof, OneSidedProfile):
        lines.append("generator = one_sided")
    elif isinstance(prof, GaussianProfile):
        lines.append("generator = gaussian")
    else:
        raise ConfigurationError(f"cannot serialize initial profile {prof!r}")
    lines += [f"{f.name} = {_fmt(getattr(prof, f.name))}" for f in fields(prof)]
    lines.append(f"mollifier_mu = {'auto' if cfg.mollifier_mu is None else _fmt(cfg.mollifier_mu)}")
    for i, w in enumerate(cfg.windows):
        lines += ["", f"[window {i}]"]
        lines += [f"{k} = {_fmt(float(getattr(w, k)))}" for k in ("x0", "epsilon", "b", "tau", "v")]
    lines += ["", "[ladder]", f"m = {cfg.ladder_m}", "", "[verdict]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.thresholds, f.name))}" for f in fields(VerdictThresholds)]
    lines += ["", "[output]", f"cadence = {cfg.output.cadence}", f"directory = {cfg.output.directory}",
              f"formats = {_fmt(cfg.output.formats)}", ""]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# snapshots


def write_snapshot(state: SolverState, path, alpha: float) -> Path:
    path = Path(path)
    g = state.u.grid
    header = _HEADER.pack(MAGIC, VERSION, g.n_points, g.half_length, float(alpha), float(state.t),
                          int(state.step_count))
    payload = np.ascontiguousarray(state.u.values, dtype="<f8").tobytes()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(header + payload)
    os.replace(tmp, path)
    return path


@dataclass
class Snapshot:
    version: int
    alpha: float
    state: SolverState

    @property
    def grid(self) -> Grid:
        return self.state.u.grid


def read_snapshot(path) -> Snapshot:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        if data[:4] != MAGIC[: len(data[:4])]:
            raise SnapshotFormatError("not an FKDV snapshot (bad magic)")
        raise SnapshotLengthError(f"truncated header: {len(data)} < {_HEADER.size} bytes")
    magic, version, n, L, alpha, t, step_count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"not an FKDV snapshot (magic {magic!r})")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    expected = _HEADER.size + 8 * n
    if len(data) != expected:
        raise SnapshotLengthError(f"payload holds {len(data) - _HEADER.size} bytes, expected {8 * n}")
    values = np.frombuffer(data, dtype="<f8", count=n, offset=_HEADER.size).astype(np.float64)
    grid = Grid(int(n), L)
    state = SolverState(t=t, u=Field(grid, values), step_count=int(step_count))
    return Snapshot(version, alpha, state)


# ---------------------------------------------------------------------------
# result files


def write_series_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_jsonl(path, records, append: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a" if append else "w") as fh:
        for rec in records:
            fh.write(json.dumps(_jsonable(rec), ensure_ascii=False) + "\n")
    return path


def read_jsonl(path):
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_experiment(result, cfg: ExperimentConfig, directory) -> dict:
    """Write energies, smoothing accumulators, conserved quantities and the report."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    recs = result.records
    if "csv" in cfg.output.formats and recs:
        labels = [r.label for r in recs]
        paths["energies"] = write_series_csv(out / "energies.csv", ["t"] + labels, accumulate_series(recs))
        rows = []
        for i, (t, *_rest) in enumerate(recs[0].accum_series):
            row = [t]
            for r in recs:
                row += [r.accum_series[i][1], r.accum_series[i][2]]
            rows.append(row)
        head = ["t"] + [c for r in recs for c in (f"{r.label}:smoothing", f"{r.label}:hilbert")]
        paths["smoothing"] = write_series_csv(out / "smoothing.csv", head, rows)
        if result.final_state is not None:
            paths["conserved"] = write_series_csv(
                out / "conserved.csv", ["t", "mass", "l2_squared", "hamiltonian", "strichartz"],
                result.final_state.conserved_log)
    if "jsonl" in cfg.output.formats:
        lines = [dict(kind="config", name=cfg.name, alpha=cfg.alpha, s_alpha=cfg.s_alpha,
                      s_wellposed=cfg.s_wellposed, n_points=cfg.grid.n_points,
                      half_length=cfg.grid.half_length, regularity_estimate=result.regularity_estimate)]
        lines += [r.as_record() for r in recs]
        lines.append(result.verdict.as_record())
        paths["report"] = write_jsonl(out / "report.jsonl", lines)
    if result.final_state is not None:
        paths["snapshot"] = write_snapshot(result.final_state, out / "final.fkdv", cfg.alpha)
    return paths
