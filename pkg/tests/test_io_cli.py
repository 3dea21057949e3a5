import math
import struct
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import fkdv.diagnostics as diag
from fkdv.cli import main
from fkdv.diagnostics import DiagnosticWindow, GaussianProfile, OneSidedProfile
from fkdv.errors import BlowUpError, ConfigurationError, SnapshotFormatError, SnapshotLengthError
from fkdv.experiment_io import (
    ConfigParseError,
    ExperimentConfig,
    OutputSettings,
    SolverSettings,
    dump_config,
    flagship_config,
    load_config,
    parse_config,
    read_jsonl,
    read_snapshot,
    write_snapshot,
)
from fkdv.solver import SolverConfig, SolverState, run
from fkdv.spectral import Field, Grid

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """
[experiment]
alpha = 0.75
[grid]
n_points = 2048
half_length = 30*pi
[solver]
dt = 1e-3
t_final = 2
[initial_data]
gamma = 1.3
[window a]
epsilon = 0.5
b = 2.5
tau = 2.5
v = 1
"""


def _smooth_text(tmp_path):
    cfg = parse_config((CONFIGS / "smooth_control.ini").read_text())
    cfg = replace(cfg, solver=SolverSettings(dt=2e-3, t_final=0.2),
                  output=OutputSettings(cadence=5, directory=str(tmp_path / "cfgdir")))
    return dump_config(cfg)


# -- configs -----------------------------------------------------------------

def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.grid == Grid(2048, 30 * math.pi)
    assert cfg.ladder_m == 2 and cfg.mollifier_mu is None
    assert cfg.windows == (DiagnosticWindow(0.0, 0.5, 2.5, 2.5, 1.0),)
    assert cfg.s_alpha == 1.625 and cfg.s_wellposed == pytest.approx(1.21875)
    assert cfg.solver_config().n_steps() == 2000


def test_shipped_configs_parse():
    assert load_config(CONFIGS / "flagship.ini") == flagship_config()
    for p in CONFIGS.glob("*.ini"):
        cfg = load_config(p)
        assert parse_config(dump_config(cfg)) == cfg


@given(alpha=st.floats(0.05, 0.95), n=st.integers(4, 12), L=st.floats(1.0, 500.0),
       eps=st.floats(0.05, 2.0), extra=st.floats(0.0, 3.0), v=st.floats(0.0, 5.0),
       gamma=st.floats(0.0, 1.0), smooth=st.booleans(), seed=st.integers(0, 2**31))
def test_config_round_trip(alpha, n, L, eps, extra, v, gamma, smooth, seed):
    m = 3
    lo, hi = 1.5 - alpha / 2, m - 0.5
    prof = GaussianProfile(0.3, 1.0, 2.0) if smooth else OneSidedProfile(gamma=lo + 1e-6 + gamma * (hi - lo - 1e-6),
                                                                         x_s=-20.0)
    cfg = ExperimentConfig(alpha=alpha, grid=Grid(2**n, L + 40), solver=SolverSettings(dt=0.01, t_final=0.5),
                           initial_profile=prof, windows=(DiagnosticWindow(0.0, eps, 5 * eps + extra,
                                                                           4.5 * eps + extra, v),),
                           ladder_m=m, seed=seed, mollifier_mu=None if smooth else 4 * (2 * (L + 40) / 2**n))
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize("key,value,rule", [("tau", "1.5", "τ > 4ε"), ("b", "2.0", "b ≥ 5ε")])
def test_window_rules_cited(key, value, rule):
    text = MINIMAL.replace(f"\n{key} = 2.5", f"\n{key} = {value}")
    with pytest.raises(ConfigurationError) as exc:
        parse_config(text)
    assert any(rule in r for r in exc.value.rules)


def test_all_violations_reported():
    text = MINIMAL.replace("alpha = 0.75", "alpha = 1.5").replace("tau = 2.5", "tau = 1").replace(
        "t_final = 2", "t_final = 2.0005")
    with pytest.raises(ConfigurationError) as exc:
        parse_config(text)
    rules = exc.value.rules
    assert "0 < α < 1" in rules and "t_final multiple of dt" in rules and any("τ > 4ε" in r for r in rules)


def test_gamma_rules_cited():
    with pytest.raises(ConfigurationError) as exc:
        parse_config(MINIMAL.replace("gamma = 1.3", "gamma = 1.0"))
    assert any(r.startswith("γ + 1/2 > s_α") for r in exc.value.rules)


def test_parse_errors_carry_location():
    with pytest.raises(ConfigParseError) as exc:
        parse_config(MINIMAL.replace("dt = 1e-3", "dt = fast"))
    assert exc.value.line == 8 and "dt" in str(exc.value)
    with pytest.raises(ConfigParseError) as exc:
        parse_config("alpha = 0.5\n" + MINIMAL)
    assert exc.value.line == 1
    with pytest.raises(ConfigParseError) as exc:
        parse_config(MINIMAL.replace("n_points = 2048\n", ""))
    assert exc.value.line == 4  # the [grid] header
    with pytest.raises(ConfigParseError) as exc:
        parse_config(MINIMAL.replace("dt = 1e-3", "dt 1e-3"))
    assert exc.value.line == 8


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "nope.ini")


def test_output_dir_precedence(monkeypatch, tmp_path):
    cfg = parse_config(MINIMAL)
    monkeypatch.delenv("FKDV_OUTPUT_DIR", raising=False)
    assert cfg.output_dir() == Path("results")
    monkeypatch.setenv("FKDV_OUTPUT_DIR", str(tmp_path))
    assert cfg.output_dir() == tmp_path
    assert cfg.output_dir("elsewhere") == Path("elsewhere")


def test_named_rng_streams_are_reproducible():
    cfg = parse_config(MINIMAL)
    a, b = cfg.rng("noise").normal(size=4), cfg.rng("noise").normal(size=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, cfg.rng("other").normal(size=4))


# -- snapshots ---------------------------------------------------------------

@pytest.fixture
def state():
    g = Grid(128, 10.0)
    rng = np.random.default_rng(3)
    return SolverState(t=0.125, u=Field(g, rng.normal(size=128)), step_count=17)


def test_snapshot_round_trip_is_bitwise(tmp_path, state):
    p = write_snapshot(state, tmp_path / "s.fkdv", 0.75)
    snap = read_snapshot(p)
    assert snap.version == 1 and snap.alpha == 0.75
    assert snap.state.t == state.t and snap.state.step_count == 17 and snap.grid == state.u.grid
    assert snap.state.u.values.tobytes() == state.u.values.tobytes()
    assert not list(tmp_path.glob("*.tmp"))


def test_snapshot_corruption(tmp_path, state):
    good = write_snapshot(state, tmp_path / "s.fkdv", 0.5).read_bytes()
    cases = {"magic": b"XKDV" + good[4:], "version": good[:4] + struct.pack("<H", 9) + good[6:]}
    for name, data in cases.items():
        (tmp_path / name).write_bytes(data)
        with pytest.raises(SnapshotFormatError):
            read_snapshot(tmp_path / name)
    for cut in (10, len(good) - 8):
        (tmp_path / "cut").write_bytes(good[:cut])
        with pytest.raises(SnapshotLengthError):
            read_snapshot(tmp_path / "cut")


def test_restart_through_snapshot_matches(tmp_path):
    g = Grid(256, 20 * math.pi)
    u0 = Field.from_function(g, lambda x: 0.6 * np.exp(-(x / 2) ** 2))
    full = run(u0, SolverConfig(alpha=0.75, dt=0.01, t_final=1.0))
    half = run(u0, SolverConfig(alpha=0.75, dt=0.01, t_final=0.5))
    snap = read_snapshot(write_snapshot(half, tmp_path / "h.fkdv", 0.75))
    rest = run(snap.state, SolverConfig(alpha=0.75, dt=0.01, t_final=1.0))
    assert np.array_equal(rest.u.values, full.u.values) and rest.step_count == 100


# -- command line ------------------------------------------------------------

def test_cli_ladder(capsys):
    assert main(["ladder", "0.5", "2"]) == 0
    out = capsys.readouterr().out
    assert "case (b)" in out and "final" in out and "2.75" in out


@pytest.mark.parametrize("argv", [["frobnicate"], [], ["ladder", "1.5", "2"], ["ladder", "0.5", "x"],
                                  ["run", "missing.ini"], ["probe", "nonsense"]])
def test_cli_usage_errors(argv, capsys):
    assert main(argv) == 2


def test_cli_verify_weights(capsys, tmp_path):
    # the default sweep contains the cases where the chi' bound is violated
    assert main(["verify-weights"]) == 1
    assert "FAIL" in capsys.readouterr().out
    assert main(["verify-weights", "--epsilon", "0.5", "--b", "2.5", "-o", str(tmp_path)]) == 0
    assert read_jsonl(tmp_path / "weights.jsonl")
    assert main(["verify-weights", "--epsilon", "0.5"]) == 2


def test_cli_verify_operators_quick(capsys):
    assert main(["verify-operators", "--quick"]) == 0
    assert "0 failed" in capsys.readouterr().out


def test_cli_probe(capsys, tmp_path):
    assert main(["probe", "leibniz", "--size", "5", "-o", str(tmp_path)]) == 0
    assert len(read_jsonl(tmp_path / "probes.jsonl")) == 2
    assert main(["probe", "leibniz", "--param", "bogus"]) == 2


def test_cli_run_and_resume(tmp_path, monkeypatch, capsys):
    cfg_path = tmp_path / "smooth.ini"
    cfg_path.write_text(_smooth_text(tmp_path))
    monkeypatch.setenv("FKDV_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", str(cfg_path)]) == 0
    out = tmp_path / "env"
    for name in ("energies.csv", "smoothing.csv", "conserved.csv", "report.jsonl", "final.fkdv"):
        assert (out / name).is_file(), name
    report = read_jsonl(out / "report.jsonl")
    assert any(r.get("kind") == "verdict" and r["passed"] for r in report)
    assert "verdict: PASS" in capsys.readouterr().out

    # resume the finished state for a longer horizon
    longer = tmp_path / "longer.ini"
    longer.write_text(cfg_path.read_text().replace("t_final = 0.2", "t_final = 0.3"))
    assert main(["resume", str(out / "final.fkdv"), str(longer), "-o", str(tmp_path / "r")]) == 0
    snap = read_snapshot(tmp_path / "r" / "resumed.fkdv")
    assert snap.state.t == pytest.approx(0.3) and snap.state.step_count == 150

    mismatched = tmp_path / "other.ini"
    mismatched.write_text(longer.read_text().replace("n_points = 1024", "n_points = 512"))
    assert main(["resume", str(out / "final.fkdv"), str(mismatched)]) == 2
    (tmp_path / "junk.fkdv").write_bytes(b"junk")
    assert main(["resume", str(tmp_path / "junk.fkdv"), str(longer)]) == 2


def test_cli_blow_up_exit_code(tmp_path, monkeypatch):
    cfg_path = tmp_path / "smooth.ini"
    cfg_path.write_text(_smooth_text(tmp_path))

    def exploding(u0, cfg, observers):
        raise BlowUpError("nan", t=0.01)

    monkeypatch.setattr(diag, "run", exploding)
    assert main(["run", str(cfg_path), "-o", str(tmp_path / "o")]) == 3
    assert read_jsonl(tmp_path / "o" / "report.jsonl")[-1]["kind"] == "failure"
