import json
import math

import numpy as np
import pytest

from conftest import dense_chain
from lipbounds import certified_constants
from saferadius.cli import main
from saferadius.dataio import save_csv
from saferadius.nn import save_model


def _write_fixture(tmp_path, steep=True):
    if steep:
        w = np.array([[8.0, 0.0], [-8.0, 0.0]])
        b = np.array([-4.0, 4.0])
    else:
        w = np.full((2, 2), 0.02)
        b = np.array([1.5, 0.0])
    net = dense_chain((w, b), input_dims=2, num_classes=2)
    model = tmp_path / "model.json"
    save_model(net, model)
    x = tmp_path / "input.csv"
    save_csv(np.array([0.4, 0.5]), x)
    lip = tmp_path / "lip.json"
    constants = certified_constants(net, math.inf).per_class
    lip.write_text(json.dumps({str(k): v for k, v in constants.items()}))
    return model, x, lip


def test_msr_run_writes_report_and_traces(tmp_path, capsys):
    model, x, lip = _write_fixture(tmp_path)
    out = tmp_path / "out"
    code = main(
        [
            "msr",
            "--model", str(model),
            "--input", str(x),
            "--metric", "Linf",
            "--radius", "0.5",
            "--tau", "0.25",
            "--features", "2",
            "--lipschitz", str(lip),
            "--max-iters", "50",
            "--seed", "3",
            "--out", str(out),
        ]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["problem"] == "MSR"
    assert (out / "upper_trace.csv").exists()
    assert (out / "lower_trace.csv").exists()
    assert "lower bound" in capsys.readouterr().out
    _assert_report_keys(report)


REPORT_KEYS = {
    "problem",
    "config",
    "lower",
    "upper",
    "error_bound",
    "certified",
    "converged",
    "verdict",
    "trace_csv_path",
    "witness_paths",
    "elapsed_seconds",
    "notes",
}


def _assert_report_keys(report):
    assert set(report) == REPORT_KEYS
    assert isinstance(report["witness_paths"], list)
    assert isinstance(report["trace_csv_path"], dict)


def test_fr_run_with_budget(tmp_path):
    model, x, lip = _write_fixture(tmp_path)
    out = tmp_path / "fr"
    code = main(
        [
            "fr",
            "--model", str(model),
            "--input", str(x),
            "--metric", "Linf",
            "--radius", "0.5",
            "--tau", "0.25",
            "--features", "2",
            "--max-iters", "40",
            "--budget", "0.3",
            "--out", str(out),
        ]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["problem"] == "FR"
    assert report["verdict"] is not None
    _assert_report_keys(report)


def test_attack_finds_adversary(tmp_path):
    model, x, _ = _write_fixture(tmp_path)
    out = tmp_path / "atk"
    code = main(
        [
            "attack",
            "--model", str(model),
            "--input", str(x),
            "--metric", "Linf",
            "--radius", "0.5",
            "--tau", "0.25",
            "--features", "2",
            "--max-iters", "500",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert (out / "report.json").exists()
    _assert_report_keys(json.loads((out / "report.json").read_text()))


def test_attack_exit_code_when_nothing_found(tmp_path):
    model, x, _ = _write_fixture(tmp_path, steep=False)  # constant classifier
    code = main(
        [
            "attack",
            "--model", str(model),
            "--input", str(x),
            "--metric", "Linf",
            "--radius", "0.3",
            "--tau", "0.25",
            "--features", "2",
            "--max-iters", "500",
            "--out", str(tmp_path / "none"),
        ]
    )
    assert code == 4


def test_partition_dump_covers_dims(tmp_path, capsys):
    model, x, _ = _write_fixture(tmp_path)
    code = main(["partition", "--model", str(model), "--input", str(x), "--features", "2"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "dim_index,feature_id"
    assert sorted(int(l.split(",")[0]) for l in lines[1:]) == [0, 1]


def test_check_grid_exit_codes(tmp_path):
    model, x, lip = _write_fixture(tmp_path, steep=False)
    ok = main(
        [
            "check-grid",
            "--model", str(model),
            "--input", str(x),
            "--metric", "Linf",
            "--radius", "0.5",
            "--tau", "0.25",
            "--lipschitz", str(lip),
        ]
    )
    assert ok == 0
    model2, x2, lip2 = _write_fixture(tmp_path, steep=True)
    bad = main(
        [
            "check-grid",
            "--model", str(model2),
            "--input", str(x2),
            "--metric", "Linf",
            "--radius", "0.5",
            "--tau", "0.25",
            "--lipschitz", str(lip2),
        ]
    )
    assert bad == 3


def test_config_errors_exit_2(tmp_path):
    model, x, _ = _write_fixture(tmp_path)
    code = main(
        [
            "msr",
            "--model", str(model),
            "--input", str(x),
            "--metric", "Linf",
            "--radius", "0.5",
            "--tau", "0.25",
            "--mode", "sideways",
        ]
    )
    assert code == 2
    missing = main(
        [
            "msr",
            "--model", str(tmp_path / "nope.json"),
            "--input", str(x),
            "--metric", "Linf",
            "--radius", "0.1",
            "--tau", "0.05",
        ]
    )
    assert missing == 2


def test_unknown_flag_exits_2(tmp_path):
    model, x, _ = _write_fixture(tmp_path)
    with pytest.raises(SystemExit) as err:
        main(["msr", "--model", str(model), "--input", str(x), "--warp-speed"])
    assert err.value.code == 2
