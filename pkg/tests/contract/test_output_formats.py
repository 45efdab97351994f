import pandas as pd
import pytest

from services.checks.base import CheckResult
from services.checks.conductor_check import LOCALIZATION_COLUMNS
from services.checks.istar_check import BUDGET_COLUMNS, ISTAR_COLUMNS
from services.checks.poisson_check import POISSON_COLUMNS
from services.checks.stationary_check import SWEEP_COLUMNS as STATIONARY_COLUMNS
from services.checks.voronoi_check import VORONOI_COLUMNS
from services.decomp_service import CHARSUM_COLUMNS, FRAME_COLUMNS, character_sum_table
from services.forms_service import CuspForm, load_coefficients, save_coefficients
from services.lcrit_service import DYADIC_COLUMNS, SWEEP_COLUMNS
from services.run_store import RunStore


def test_column_orders():
    assert SWEEP_COLUMNS == ["t", "re_L", "im_L", "abs_L", "convexity_ratio"]
    assert DYADIC_COLUMNS == ["t", "N", "K", "abs_S", "s_ratio"]
    assert FRAME_COLUMNS == ["q", "a", "a_bar", "re_plus", "im_plus", "re_minus", "im_minus"]
    assert STATIONARY_COLUMNS[:3] == ["parameter", "oracle_re", "oracle_im"]
    assert POISSON_COLUMNS[:4] == ["q", "a", "x", "v"]
    assert LOCALIZATION_COLUMNS == ["separation", "r", "kernel_abs", "envelope"]
    assert "relative_residual" in VORONOI_COLUMNS
    assert ISTAR_COLUMNS[:3] == ["q", "m", "tau"]
    assert BUDGET_COLUMNS[0] == "C"


def test_csv_header_and_precision(tmp_path):
    store = RunStore(tmp_path / "runs", tmp_path / "out")
    result = CheckResult(tables={"identity": character_sum_table(2)})
    (path,) = store.write_tables("charsum", result)
    lines = open(path, encoding="utf-8").read().split("\n")
    assert lines[0] == ",".join(CHARSUM_COLUMNS)
    assert lines[-1] == ""
    assert "\r" not in lines[1]
    pd.testing.assert_frame_equal(pd.read_csv(path), character_sum_table(2), check_dtype=False)


def test_plot_script_listed_after_csv(tmp_path):
    store = RunStore(tmp_path / "runs", tmp_path / "out")
    table = pd.DataFrame({column: [1.0] for column in SWEEP_COLUMNS})
    outputs = store.write_tables("sweep", CheckResult(tables={"sweep": table}, plots=["sweep"]))
    assert [p.rsplit("/", 1)[-1] for p in outputs] == ["sweep_sweep.csv", "sweep_sweep.gp"]


def test_coefficient_cache_format(tmp_path):
    path = tmp_path / "tau.txt"
    save_coefficients(CuspForm(weight=12, tau_cache=(1, -24, 252, -1472)), path)
    assert path.read_text() == "weight=12 n_max=4\n1\n-24\n252\n-1472\n"
    assert load_coefficients(path).n_max == 4


@pytest.mark.parametrize("header", ["weight=12", "n_max=4", "weight:12 n_max=4"])
def test_coefficient_cache_rejects_bad_header(tmp_path, header):
    path = tmp_path / "tau.txt"
    path.write_text(f"{header}\n1\n-24\n252\n-1472\n")
    with pytest.raises(ValueError):
        load_coefficients(path)
