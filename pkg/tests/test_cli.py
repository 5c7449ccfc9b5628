# tests/test_cli.py

import dataclasses
import json
from pathlib import Path

import pandas as pd
import pytest

from backend import cli
from backend.cli import EXIT_CONFIG, EXIT_OK, cmd_sweep, cmd_tables, cmd_validate, main
from backend.service.errors import ConfigError
from backend.utils.io import load_scenario, read_scenario_dict, sidecar_path

SCENARIO_TOML = """
name = "tiny"

[cellular]
n = 4
gamma_bar_db = 10.0

[prs]
m = 3
k = 3
rho = 0.5

[hpa]
model = "twta"
ibo = 2.0

[sweep]
var = "mu_r_db"
values = [10.0, 20.0]
metrics = ["c2_approx", "c2_ceiling", "c2"]

[mc]
samples = 2000
seed = 5
"""


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(SCENARIO_TOML, encoding="utf-8")
    return path


def test_toml_and_json5_scenarios(tmp_path, scenario_file):
    assert load_scenario(scenario_file).cellular.n == 4
    path = tmp_path / "tiny.json5"
    path.write_text("{ name: 'tiny', cellular: { n: 8, }, // trailing comment\n}", encoding="utf-8")
    assert load_scenario(path).cellular.n == 8


def test_canned_name_resolves_without_a_file():
    assert load_scenario("fig5a").name == "fig5a"


def test_unreadable_scenarios_are_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_scenario_dict(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("name = ", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_scenario_dict(broken)
    yaml = tmp_path / "scenario.yaml"
    yaml.write_text("name: x", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_scenario_dict(yaml)


def test_sweep_writes_csv_and_sidecar(tmp_path, scenario_file):
    out = tmp_path / "out" / "tiny.csv"
    assert cmd_sweep(str(scenario_file), str(out)) == EXIT_OK

    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "sweep_var,value,metric,estimate,half_width_95,n,tag"
    df = pd.read_csv(out)
    assert len(df) == 6
    assert list(df["metric"]) == ["c2_approx", "c2_ceiling", "c2"] * 2
    assert set(df["tag"]) == {"analytic", "monte-carlo"}
    assert b"\r\n" not in out.read_bytes()

    sidecar = json.loads(sidecar_path(out).read_text(encoding="utf-8"))
    assert sidecar["scenario"]["mc"] == {"samples": 2000, "seed": 5, "chunk_size": None}
    assert sidecar["provenance"]["cellular.n"] == "scenario"
    assert sidecar["resolved"]["fso.lambda2_nm"] == 1550.0
    assert sidecar["units"]["rates"] == "nats"


def test_sidecar_reproduces_the_same_bytes(tmp_path, scenario_file):
    first = tmp_path / "first.csv"
    assert cmd_sweep(str(scenario_file), str(first)) == EXIT_OK
    second = tmp_path / "second.csv"
    assert cmd_sweep(str(sidecar_path(first)), str(second)) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_json_output_and_bits(tmp_path, scenario_file):
    nats = tmp_path / "nats.json"
    bits = tmp_path / "bits.json"
    assert cmd_sweep(str(scenario_file), str(nats), fmt="json") == EXIT_OK
    assert cmd_sweep(str(scenario_file), str(bits), fmt="json", bits=True) == EXIT_OK
    in_nats = json.loads(nats.read_text(encoding="utf-8"))
    in_bits = json.loads(bits.read_text(encoding="utf-8"))
    assert in_bits[0]["estimate"] == pytest.approx(in_nats[0]["estimate"] / 0.6931471805599453)


def test_seed_flag_changes_monte_carlo_rows_only(tmp_path, scenario_file):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert cmd_sweep(str(scenario_file), str(a)) == EXIT_OK
    assert cmd_sweep(str(scenario_file), str(b), seed=6) == EXIT_OK
    da, db = pd.read_csv(a), pd.read_csv(b)
    analytic = da["tag"] == "analytic"
    assert (da[analytic]["estimate"] == db[analytic]["estimate"]).all()
    assert (da[~analytic]["estimate"] != db[~analytic]["estimate"]).all()


@pytest.mark.parametrize(
    "patch",
    [
        ("metrics = [\"c2_approx\", \"c2_ceiling\", \"c2\"]", "metrics = []"),
        ("values = [10.0, 20.0]", "values = []"),
        ("ibo = 2.0", "ibo = 2.0\nkappa = 0.5"),
        ("n = 4", "n = 4\nantennas = 64"),
    ],
)
def test_bad_scenarios_exit_with_config_code(tmp_path, patch, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(SCENARIO_TOML.replace(*patch), encoding="utf-8")
    out = tmp_path / "bad.csv"
    assert cmd_sweep(str(path), str(out)) == EXIT_CONFIG
    assert not out.exists()
    assert "Configuration error" in capsys.readouterr().err


def test_validate_rejects_distortion_below_one(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(SCENARIO_TOML.replace("ibo = 2.0", "ibo = 2.0\nkappa = 0.5"), encoding="utf-8")
    assert cmd_validate(str(path)) == EXIT_CONFIG


def test_tables_print_the_canned_parameters(capsys):
    assert cmd_tables() == EXIT_OK
    text = capsys.readouterr().out
    for expected in ("30 GHz", "64", "700 MHz", "1550 nm", "5 cm", "5e-14", "BPSK", "64-QAM", "unverified"):
        assert expected in text


def test_main_dispatches_subcommands(capsys):
    assert main(["tables"]) == EXIT_OK
    assert "Cellular system parameters" in capsys.readouterr().out
    assert main([]) == EXIT_CONFIG


@pytest.mark.slow
def test_validate_passes_on_a_small_link(scenario_file, capsys):
    assert cmd_validate(str(scenario_file), samples=20_000) == EXIT_OK
    assert "PASS" in capsys.readouterr().out


@pytest.mark.parametrize("name", ["fso_severity.toml", "selection_rank.json5"])
def test_example_scenarios_load(name):
    scenario = load_scenario(Path(__file__).resolve().parent.parent / "example_data" / name)
    assert scenario.sweep.series


def test_workers_flag_reaches_the_sweep(tmp_path, scenario_file, monkeypatch):
    seen = []
    real_run_sweep = cli.run_sweep

    def recording_run_sweep(spec):
        seen.append(spec.workers)
        return real_run_sweep(dataclasses.replace(spec, workers=1))

    monkeypatch.setattr(cli, "run_sweep", recording_run_sweep)
    out = tmp_path / "w.csv"
    assert main(["sweep", str(scenario_file), "--out", str(out), "--workers", "3"]) == EXIT_OK
    assert seen == [3]


def test_workers_flag_rejects_zero(scenario_file):
    with pytest.raises(SystemExit):
        main(["validate", str(scenario_file), "--workers", "0"])
