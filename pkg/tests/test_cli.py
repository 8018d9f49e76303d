import os

import pytest

import qts_bench
from experiment.compare import compare
from models.model_params import ModelParams
from models.presets import ESTIMATED, NOMINAL
from models.run_config import RunConfig
from models.run_record import RunRecord


@pytest.fixture
def small_config(tmp_path):
    """Short excitation, cheap estimation and a 100 s LMPC run."""
    config = RunConfig(seed=4, duration=100.0)
    config.excitation.duration = 300.0
    config.estimation.free = []
    config.mpc.N_c = 20
    path = tmp_path / "config.json"
    config.save_json(str(path))
    return str(path)


def test_help_exits_cleanly():
    assert qts_bench.main(["--help"]) == 0


@pytest.mark.parametrize("argv", [
    [],
    ["run", "--seed", "1", "--controller", "lqr"],
    ["frobnicate"],
])
def test_usage_errors(argv):
    assert qts_bench.main(argv) == 2


def test_missing_seed_is_a_usage_error(tmp_path):
    assert qts_bench.main(["run", "--out", str(tmp_path)]) == 2


def test_missing_config_file(tmp_path):
    assert qts_bench.main(["run", "--config", str(tmp_path / "nope.json")]) == 2


def test_missing_dataset_fails(tmp_path):
    assert qts_bench.main(["estimate", str(tmp_path / "nope.csv"), "--seed", "1",
                           "--out", str(tmp_path)]) == 1


def test_simulate_is_byte_deterministic(small_config, tmp_path, capsys):
    for name in ("a", "b"):
        assert qts_bench.main(["simulate", "--config", small_config,
                               "--out", str(tmp_path / name)]) == 0
    first = (tmp_path / "a" / "excitation.csv").read_bytes()
    assert first == (tmp_path / "b" / "excitation.csv").read_bytes()
    assert "61 samples" in capsys.readouterr().out


def test_estimate_with_empty_mask_returns_guess(small_config, tmp_path, capsys):
    out = str(tmp_path / "est")
    assert qts_bench.main(["simulate", "--config", small_config, "--out", out]) == 0
    dataset = os.path.join(out, "excitation.csv")
    assert qts_bench.main(["estimate", dataset, "--config", small_config, "--out", out]) == 0
    assert ModelParams.load_json(os.path.join(out, "theta.json")) == NOMINAL
    assert qts_bench.main(["estimate", dataset, "--config", small_config, "--out", out,
                           "--preset", "estimated"]) == 0
    assert ModelParams.load_json(os.path.join(out, "theta.json")) == ESTIMATED
    printed = capsys.readouterr().out
    assert "Estimation GOF" in printed and "V_ML" in printed


def test_run_compare_and_report(small_config, tmp_path, capsys):
    out = str(tmp_path / "runs")
    assert qts_bench.main(["run", "--config", small_config, "--out", out]) == 0
    record_path = os.path.join(out, "run_lmpc.csv")
    assert RunRecord.load(record_path).rows == 21

    assert qts_bench.main(["compare", record_path, "--out", out]) == 0
    with open(os.path.join(out, "comparison.csv"), encoding="utf-8") as f:
        assert f.read() == compare([RunRecord.load(record_path)]).to_csv()

    assert qts_bench.main(["report", record_path, "--out", out, "--bins", "5"]) == 0
    assert os.path.getsize(os.path.join(out, "report.pdf")) > 0
    assert os.path.exists(os.path.join(out, "histograms.csv"))
    assert "LMPC" in capsys.readouterr().out


def test_analyze_reports_structure(capsys):
    assert qts_bench.main(["analyze"]) == 0
    printed = capsys.readouterr().out
    assert "non-minimum phase" in printed
    assert "y1-u2, y2-u1" in printed
