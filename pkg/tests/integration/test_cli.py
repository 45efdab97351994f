import json

import pandas as pd
import pytest

from main import EXIT_FAILED, EXIT_PASSED, EXIT_USAGE, run
from services.run_store import RunStore


@pytest.fixture
def cli(dirs, capsys):
    """Run the CLI against tmp_path directories; returns (status, stdout JSON or text)."""
    def invoke(*argv):
        status = run(["--runs-dir", str(dirs["runs_dir"]), "--out-dir", str(dirs["out_dir"]), *argv])
        out = capsys.readouterr().out
        try:
            return status, json.loads(out)
        except json.JSONDecodeError:
            return status, out
    return invoke


def test_verify_charsum_passes(cli, dirs):
    status, report = cli("verify", "charsum", "--max", "4")
    assert status == EXIT_PASSED
    assert report["passed"] is True
    assert report["command"] == "verify charsum"
    assert report["residuals"]["charsum"] < 1e-9

    csv_path = dirs["out_dir"] / "charsum_identity.csv"
    assert str(csv_path) in report["outputs"]
    assert len(pd.read_csv(csv_path)) == 36

    records = RunStore(dirs["runs_dir"], dirs["out_dir"]).list_records()
    assert [r.run_id for r in records] == [report["run_id"]]
    assert records[0].config_snapshot["tol_charsum"] == 1e-9


def test_verify_delta_grid(cli, dirs):
    status, report = cli("verify", "delta")
    assert status == EXIT_PASSED
    grid = pd.read_csv(dirs["out_dir"] / "delta_grid.csv")
    assert len(grid) == 15 * 101
    assert report["residuals"]["weight_sum"] <= 1e-12


def test_tolerance_violation_exits_one(cli, dirs):
    status, report = cli("verify", "charsum", "--max", "3", "--set", "tol_charsum=-1")
    assert status == EXIT_FAILED
    assert report["error_code"] == "tolerance_violation"
    assert report["residual"] == "charsum"

    records = RunStore(dirs["runs_dir"], dirs["out_dir"]).list_records()
    assert len(records) == 1
    assert records[0].passed is False
    assert records[0].failing_residual == "charsum"
    assert records[0].run_id == report["run_id"]


@pytest.mark.parametrize(
    "argv",
    [
        ("frobnicate",),
        ("verify", "nonsense"),
        ("verify", "delta", "--limit", "10"),
        ("eval-l",),
        ("sweep", "--points", "many"),
    ],
)
def test_usage_errors_exit_two(cli, argv):
    status, _ = cli(*argv)
    assert status == EXIT_USAGE


def test_config_errors_exit_two(cli, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("epsilon\n")
    status, report = cli("--config", str(bad), "verify", "charsum", "--max", "2")
    assert status == EXIT_USAGE
    assert report["error_code"] == "config_error"

    status, _ = cli("verify", "charsum", "--set", "flux_capacitor=1")
    assert status == EXIT_USAGE
    status, _ = cli("verify", "charsum", "--set", "epsilon")
    assert status == EXIT_USAGE


def test_global_flags_after_verb(cli, dirs):
    status, report = cli("verify", "charsum", "--max", "2", "--threads", "4", "--epsilon", "0.05")
    assert status == EXIT_PASSED
    record = RunStore(dirs["runs_dir"], dirs["out_dir"]).list_records()[0]
    assert record.config_snapshot["threads"] == 4
    assert record.config_snapshot["epsilon"] == 0.05


def test_list(cli):
    status, infos = cli("list")
    assert status == EXIT_PASSED
    ids = {info["id"] for info in infos}
    assert {"delta", "charsum", "eval-l", "sweep", "decompose"} <= ids


def test_eval_l(cli):
    status, report = cli("eval-l", "--t", "10")
    assert status == EXIT_PASSED
    results = report["results"]
    assert results["abs_L"] == pytest.approx(abs(complex(results["re_L"], results["im_L"])))


@pytest.mark.slow
def test_sweep_with_plot(cli, dirs):
    status, report = cli("sweep", "--tmin", "10", "--tmax", "30", "--points", "3", "--plot")
    assert status == EXIT_PASSED
    assert (dirs["out_dir"] / "sweep_sweep.csv").exists()
    assert (dirs["out_dir"] / "sweep_sweep.gp").exists()
    assert (dirs["out_dir"] / "sweep_dyadic.csv").exists()
