import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kstarsel.cli import main
from kstarsel.core import SystemConfig
from kstarsel.errors import ConfigError
from kstarsel.runconfig import parse_run_config
from kstarsel.sim import ergodic_rate
from kstarsel.tables import ResultTable, fmt, parse

SMALL_INI = """
[system]
num_antennas = 8
num_candidates = 16
tx_power_dbm = 25
seed = 3

[run]
schemes = kstar-lus, kstar-rus, rus, sus
trials = 120

[sweep]
axis = power_dbm
values = 10, 30

[sus]
alpha_grid = 0.3, 0.6
tune_trials = 40

[fairness]
windows = 5
slots_per_window = 10

[validate]
antennas = 8, 16
trials = 40
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL_INI)
    return path


def _summary(err):
    return json.loads(next(l for l in err.splitlines() if l.startswith("{")))


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_kstar_reference_defaults(capsys):
    code, out, err = _run(["kstar"], capsys)
    assert code == 0
    summary = _summary(err)
    assert summary["k_star_rus"] < 32 and summary["k_star_lus"] < 32
    table = ResultTable.from_csv(out)
    assert table.columns == ["K", "rate_rus_approx", "rate_lus_approx"]
    assert table.column("K") == list(range(1, 32))


def test_kstar_two_antennas(tmp_path, capsys):
    cfg = tmp_path / "m2.ini"
    cfg.write_text("[system]\nnum_antennas = 2\nnum_candidates = 4\n")
    code, _, err = _run(["kstar", "--config", cfg], capsys)
    summary = _summary(err)
    assert code == 0 and summary["k_star_rus"] == 1 and summary["k_star_lus"] == 1


def test_out_writes_csv_and_json(tmp_path, small_config, capsys):
    out = tmp_path / "res" / "k.csv"
    code, stdout, _ = _run(["kstar", "--config", small_config, "--out", out], capsys)
    assert code == 0 and stdout == ""
    assert "timestamp" not in out.read_text()
    summary = json.loads(out.with_suffix(".json").read_text())
    assert "timestamp" in summary and summary["fingerprint"] == SystemConfig(
        num_antennas=8, num_candidates=16, tx_power_dbm=25, seed=3).fingerprint()


def test_unknown_key_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[system]\nnum_antenas = 8\n")
    code, _, err = _run(["kstar", "--config", cfg], capsys)
    assert code == 2 and "num_antenas" in err


@pytest.mark.parametrize("text", [
    "[plots]\nx = 1\n",
    "[run]\nschemes = rus, magic\n",
    "[system]\nest_error = 2\n",
    "[sweep]\naxis = bandwidth\n",
    "[run]\ntrials = many\n",
    "not an ini",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_run_config(text)


def test_missing_config_file(tmp_path, capsys):
    code, _, _ = _run(["kstar", "--config", tmp_path / "nope.ini"], capsys)
    assert code == 2


def test_bad_flags(capsys):
    assert _run(["simulate", "--scheme", "magic", "--trials", "5"], capsys)[0] == 2
    assert _run(["simulate", "--trials", "0"], capsys)[0] == 2


def test_numerical_failure_exit_code(monkeypatch, capsys):
    from kstarsel import cli
    from kstarsel.errors import NoConvergence

    def boom(run, args):
        raise NoConvergence("forced")

    monkeypatch.setitem(cli.COMMANDS, "kstar", (boom, "forced"))
    code, _, err = _run(["kstar"], capsys)
    assert code == 3 and "forced" in err


def test_config_round_trip_values():
    run = parse_run_config(SMALL_INI)
    assert run.system.num_antennas == 8 and run.system.tx_power_dbm == 25.0
    assert run.values == [10.0, 30.0] and run.alpha_grid == [0.3, 0.6]
    assert run.validate_trials == 40 and run.antennas == [8, 16]


def test_simulate_matches_library(small_config, capsys):
    code, out, _ = _run(["simulate", "--config", small_config, "--scheme", "rus",
                         "--trials", 10], capsys)
    assert code == 0
    table = ResultTable.from_csv(out)
    cfg = parse_run_config(SMALL_INI).system
    rep = ergodic_rate(cfg, "rus", trials=10)
    assert table.column("mean_rate") == [rep.mean]
    assert table.column("stderr") == [rep.stderr]
    assert "alpha_sus" not in table.columns


def test_simulate_sus_column(small_config, capsys):
    code, out, _ = _run(["simulate", "--config", small_config, "--scheme", "sus",
                         "--trials", 20], capsys)
    table = ResultTable.from_csv(out)
    assert code == 0 and table.column("alpha_sus")[0] in (0.3, 0.6)


def test_fairness_columns(small_config, capsys):
    code, out, _ = _run(["fairness", "--config", small_config, "--scheme", "kstar-lus"], capsys)
    table = ResultTable.from_csv(out)
    assert code == 0
    for col in ("scheme", "jfi_mean", "jfi_std", "k_star", "N"):
        assert col in table.columns
    assert table.column("jfi_mean")[0] == pytest.approx(table.column("k_star")[0] / 16)


def test_validate_assert(small_config, tmp_path, capsys):
    code, out, err = _run(["validate", "--config", small_config], capsys)
    assert code == 0
    table = ResultTable.from_csv(out)
    assert table.column("M") == [8, 16] and table.column("K") == [2, 4]
    cfg = tmp_path / "v.ini"
    cfg.write_text("[system]\nest_error = 0.1\ncorr_coef = 0.5\n[validate]\nantennas = 32, 64, 128\n")
    code, _, err = _run(["validate", "--config", cfg, "--trials", 400, "--assert"], capsys)
    summary = _summary(err)
    assert code == (0 if summary["passed"] else 4)
    cfg.write_text("[system]\nest_error = 0.1\ncorr_coef = 0.5\n[validate]\nantennas = 128, 32\n")
    code, _, _ = _run(["validate", "--config", cfg, "--trials", 100, "--assert"], capsys)
    assert code == 4


def test_sweep_rows(small_config, capsys):
    code, out, err = _run(["sweep", "--config", small_config, "--scheme", "kstar-rus",
                           "--scheme", "rus", "--trials", 30], capsys)
    table = ResultTable.from_csv(out)
    assert code == 0 and len(table.rows) == 4
    assert table.units["value"] == "dBm"
    assert _summary(err)["errors"] == 0


@pytest.mark.parametrize("command", ["kstar", "approx", "simulate", "sweep", "fairness", "validate"])
def test_reruns_byte_identical_across_threads(command, small_config, tmp_path, capsys):
    texts = []
    for threads in (1, 8, 8):
        out = tmp_path / f"{command}-{threads}-{len(texts)}.csv"
        code, _, _ = _run([command, "--config", small_config, "--threads", threads, "--out", out], capsys)
        assert code == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1] == texts[2]


def test_every_column_has_units(small_config, capsys):
    _, out, _ = _run(["approx", "--config", small_config], capsys)
    table = ResultTable.from_csv(out)
    assert set(table.units) == set(table.columns)
    with pytest.raises(ValueError):
        ResultTable(["a"], {})


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_serialization_round_trip(x):
    assert parse(fmt(x)) == x


def test_csv_round_trip():
    table = ResultTable(["a", "b", "c"], {"a": "1", "b": "mW", "c": "-"}, meta={"seed": 1})
    values = [0.1 + 0.2, 1e-300, 2.0**60, -7.25]
    for v in values:
        table.add(a=v, b=v / 3, c="x")
    back = ResultTable.from_csv(table.to_csv())
    assert back.rows == table.rows and back.units == table.units
    assert back.meta["seed"] == "1"
    nan = ResultTable(["a"], {"a": "1"})
    nan.add()
    assert math.isnan(ResultTable.from_csv(nan.to_csv()).rows[0][0])
