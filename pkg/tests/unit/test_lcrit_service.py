import math

import pytest

from services.errors import DomainError, ResourceLimitError
from services.lcrit_service import (
    SweepPlan,
    afe_length,
    convexity_sweep,
    dyadic_range,
    dyadic_sup,
    emit_plot_script,
    k_rule,
    l_value_afe,
    l_value_oracle,
    s_of_n,
    trivial_range_check,
)
from services.window_service import make_bump


@pytest.fixture(scope="module")
def V():
    return make_bump(1.0, 2.0, normalized=True)


def test_dyadic_range():
    assert dyadic_range(100.0, 0.0) == [1, 2, 4, 8, 16, 32, 64]
    assert dyadic_range(1.0, 0.02) == [1]


def test_k_rule():
    assert k_rule(8.0) == pytest.approx(4.0)


def test_afe_length_grows_with_t_and_precision():
    assert afe_length(100.0) > afe_length(10.0)
    assert afe_length(10.0, precision=1e-20) > afe_length(10.0, precision=1e-10)
    with pytest.raises(DomainError):
        afe_length(10.0, precision=0.0)


def test_s_of_n_against_direct_sum(form, V):
    N, t = 40.0, 30.0
    expected = sum(
        form.lambda_value(n) * complex(math.cos(t * math.log(n)), -math.sin(t * math.log(n))) * V(n / N)
        for n in range(40, 81)
    )
    assert s_of_n(form, N, t, V) == pytest.approx(expected, abs=1e-12)


def test_s_of_n_needs_coefficients(form, V):
    with pytest.raises(ResourceLimitError):
        s_of_n(form, form.n_max, 10.0, V)


@pytest.mark.slow
@pytest.mark.parametrize("t", [10.0, 50.0])
def test_afe_matches_oracle(form, t):
    assert abs(l_value_afe(form, t) - l_value_oracle(form, t)) <= 1e-6


def test_afe_is_real_symmetric(form):
    assert l_value_afe(form, -10.0) == pytest.approx(l_value_afe(form, 10.0).conjugate(), abs=1e-10)


def test_sweep_plan_rejects_small_t(V):
    with pytest.raises(DomainError):
        SweepPlan(t_grid=[2.0], epsilon=0.02, V=V)
    with pytest.raises(DomainError):
        SweepPlan(t_grid=[], epsilon=0.02, V=V)


def test_convexity_sweep_table(form, V):
    plan = SweepPlan.linear(10.0, 20.0, 3, 0.02, V)
    result = convexity_sweep(form, plan)
    assert list(result.table["t"]) == [10.0, 15.0, 20.0]
    assert list(result.table.columns) == ["t", "re_L", "im_L", "abs_L", "convexity_ratio"]
    assert result.max_convexity_ratio == result.table["convexity_ratio"].max()
    assert math.isfinite(result.exponent)


def test_plot_script(tmp_path):
    csv_path = tmp_path / "sweep_sweep.csv"
    script = emit_plot_script(csv_path)
    assert script.name == "sweep_sweep.gp"
    text = script.read_text()
    assert "plot 'sweep_sweep.csv' using 1:5" in text
    assert "set output 'sweep_sweep.png'" in text


def test_dyadic_sup_rows(form, V):
    report = dyadic_sup(form, 20.0, V, epsilon=0.02)
    rows = report["rows"]
    assert [row["N"] for row in rows] == [1, 2, 4, 8, 16]
    last = rows[-1]
    assert last["abs_S"] == pytest.approx(abs(s_of_n(form, 16, 20.0, V)))
    assert last["s_ratio"] == pytest.approx(last["abs_S"] / 4.0)
    assert last["K"] == pytest.approx(k_rule(16))
    assert report["sup"] == max(row["s_ratio"] for row in rows)


def test_trivial_range_check(form, V):
    t = 100.0
    # t^(3/4) = 31.6, so N runs over 1, 2, 4, 8, 16
    expected = max(abs(s_of_n(form, N, t, V)) / (N * t ** 0.02) for N in (1, 2, 4, 8, 16))
    assert trivial_range_check(form, t, V, epsilon=0.02) == pytest.approx(expected)
