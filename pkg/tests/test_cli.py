import csv
import io
import json

import pytest

from quantum_clock.cli import main, read_config_file
from quantum_clock.errors import ConfigInvalid
from quantum_clock.experiments import EXPERIMENTS, ExperimentConfig, run
from quantum_clock.report import ExperimentReport, emit, to_csv, to_json

SMALL = ["--half-width", "16"]


def _run(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return exc.value.code, capsys.readouterr()


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_every_experiment_runs(name, tmp_path):
    out = tmp_path / f"{name}.json"
    # at N = 16 a packet moved by 2 tau reaches the buffer
    extra = ["--t-grid", "0.5,1"] if name == "sigma-invariance" else []
    assert main([name, *SMALL, "--width", "1.5", *extra, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["experiment"] == name
    assert doc["units"]["hbar"] == 1
    assert "wall_time" not in doc


def test_verify_ccr_json_fields(capsys):
    assert main(["verify-ccr", *SMALL, "--width", "1.5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    res = doc["results"]
    for key in ("N", "B", "residual_interior", "residual_boundary", "tolerance", "trace"):
        assert key in res
    assert res["N"] == 16 and res["B"] == 8
    assert [row["half_width"] for row in doc["series"]] == [8, 16, 32, 64]
    assert set(res["gaussian_expectation"]) == {"im", "re"}


def test_json_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["uncertainty", *SMALL, "--seed", "7", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_json_floats_round_trip():
    rep = run(ExperimentConfig(experiment="covariance", half_width=16))
    doc = json.loads(to_json(rep))
    assert [r["residual"] for r in doc["series"]] == [r["residual"] for r in rep.series]


def test_csv_output(tmp_path):
    out = tmp_path / "cov.csv"
    assert main(["covariance", *SMALL, "--format", "csv", "--t-grid", "0.1,1", "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert raw.count(b"\r\n") == 3
    rows = list(csv.reader(io.StringIO(raw.decode())))
    assert rows[0] == ["t", "residual"]
    assert [float(r[0]) for r in rows[1:]] == [0.1, 1.0]


def test_csv_empty_series_is_header_only():
    rep = ExperimentReport("leakage", {}, columns=["k", "boundary_mass"])
    assert to_csv(rep) == "k,boundary_mass\r\n"


def test_emit_rejects_unwritable_path(tmp_path):
    rep = ExperimentReport("leakage", {})
    with pytest.raises(Exception) as exc:
        emit(rep, "json", tmp_path / "missing" / "r.json")
    assert getattr(exc.value, "category", "") == "IoFailure"


@pytest.mark.parametrize(
    "argv",
    [
        ["covariance", "--tau", "-1"],
        ["covariance", "--half-width", "abc"],
        ["covariance", "--format", "xml"],
        ["covariance", "--bogus", "1"],
        ["nonexistent"],
        ["covariance", "--k-grid", "1,x"],
        ["eigen-scan", "--n-list", "32,16,64"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    code, out = _run(argv, capsys)
    assert code == 2
    err = json.loads(out.err.strip().splitlines()[-1])
    assert err["error"] == "ConfigInvalid"


def test_experiment_failure_exit_3(capsys):
    # a width-12 Gaussian spills into the buffer at N = 32
    code, out = _run(["sigma-invariance", "--width", "12"], capsys)
    assert code == 3
    assert json.loads(out.err.strip())["error"] == "ExperimentFailed"


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# covariance run\nhalf-width = 16\nt-grid = 0.1, 2  # two points\nformat = json\n")
    assert read_config_file(cfg)["t-grid"] == "0.1, 2"
    assert main(["covariance", "--config", str(cfg), "--t-grid", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"]["half-width"] == 16
    assert [r["t"] for r in doc["series"]] == [1.0]


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("half-width 16\n")
    with pytest.raises(ConfigInvalid):
        read_config_file(bad)
    bad.write_text("colour = red\n")
    assert _run(["covariance", "--config", str(bad)], capsys)[0] == 2
    other = tmp_path / "other.cfg"
    other.write_text("experiment = leakage\n")
    assert _run(["covariance", "--config", str(other)], capsys)[0] == 2


def test_k_grid_band_edge_suffix():
    cfg = ExperimentConfig(experiment="leakage", tau=0.5, k_grid="2W, 1.5")
    assert cfg._grid("k_grid") == [pytest.approx(4 * 3.141592653589793), 1.5]


def test_verbose_logs_verdicts(capsys, caplog):
    caplog.set_level("INFO", logger="quantum_clock")
    assert main(["-v", "covariance", *SMALL, "--t-grid", "1"]) == 0
    assert main(["covariance", *SMALL, "--t-grid", "1", "-v"]) == 0
    assert sum(r.getMessage().startswith("PASS") for r in caplog.records) == 2
