import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from services import decomp_service
from services.calibration import CALIBRATION_FILE, CalibrationStore
from services.checks.istar_check import v_stationary_residual
from services.decomp_service import (
    CHARSUM_COLUMNS,
    DecompConfig,
    calibrate_c4,
    character_sum,
    character_sum_expected,
    character_sum_table,
    conjugate_partner_residual,
    decompose,
    dual_m_cut,
    dyadic_segments,
    error_budget,
    i_one,
    i_one_shape,
    i_star_star,
    integrated_error_budget,
    istar_grid,
    poisson_draws,
    poisson_dual_m_sum,
    poisson_report,
    s_of_n_via_delta,
    s_plus_minus,
    segment_base,
    v_phase,
    v_stationary_point,
)
from services.errors import DomainError, ResourceLimitError
from services.lcrit_service import s_of_n


@pytest.fixture
def desk():
    return DecompConfig(N=60.0, K=8.0, t=100.0, Q=3.0)


@pytest.fixture
def istar_desk():
    return DecompConfig(N=30.0, K=6.0, t=200.0, Q=3.0)


@pytest.fixture
def small():
    return DecompConfig(N=20.0, K=4.0, t=10.0)


@given(
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=-100, max_value=100),
)
def test_character_sum_identity(q, q_prime, a, a_prime, n):
    assume(math.gcd(a, q) == 1 and math.gcd(a_prime, q_prime) == 1)
    value = character_sum(q, q_prime, a, a_prime, n)
    assert abs(value - character_sum_expected(q, q_prime, a, a_prime, n)) < 1e-9


def test_character_sum_table():
    table = character_sum_table(4)
    assert list(table.columns) == CHARSUM_COLUMNS
    # sum over q, q' <= 4 of phi(q) phi(q') = (1 + 1 + 2 + 2)^2
    assert len(table) == 36
    assert table["max_residual"].max() < 1e-9
    assert (table["identity_value"] - table["residues"]).abs().max() < 1e-9


@pytest.mark.parametrize("q, C", [(1, 0.5), (2, 1.0), (3, 2.0), (4, 2.0), (5, 4.0), (8, 4.0), (9, 8.0)])
def test_segment_base(q, C):
    assert segment_base(q) == C
    assert C < q <= 2 * C


def test_dyadic_segments_cover_moduli():
    segments = dyadic_segments(7.5)
    assert segments == [0.5, 1.0, 2.0, 4.0]
    for q in range(1, 8):
        assert any(C < q <= 2 * C for C in segments)


def test_error_budget_knee(desk, isolated_settings):
    eps = isolated_settings.epsilon
    plateau = desk.t ** eps / (math.sqrt(desk.t) * desk.K ** 1.5)
    tail = math.sqrt(desk.N / (desk.Q * 2.0)) / (math.sqrt(desk.t) * desk.K ** 2.5)
    assert error_budget(desk, 2.0, 0.0) == pytest.approx(plateau + tail)
    assert error_budget(desk, 2.0, 20 * desk.K) == pytest.approx(plateau / 2 + tail)
    with pytest.raises(DomainError):
        error_budget(desk, 0.0, 0.0)


@pytest.mark.parametrize("C", [0.5, 1.0, 2.0])
def test_integrated_budget_closed_form(desk, C):
    budget = integrated_error_budget(desk, C)
    assert budget["relative_error"] < 1e-6
    assert budget["ratio_to_shape"] > 0


def test_config_validation():
    with pytest.raises(DomainError):
        DecompConfig(N=60.0, K=200.0, t=100.0)
    with pytest.raises(ResourceLimitError):
        DecompConfig(N=10_000.0, K=8.0, t=100.0)
    assert DecompConfig(N=72.0, K=8.0, t=100.0).Q == pytest.approx(3.0)


def test_dual_cut(desk, isolated_settings):
    expected = math.ceil(4 * (2 * desk.t ** (1 + isolated_settings.epsilon) / desk.N + 1))
    assert dual_m_cut(desk, 2) == expected


def test_poisson_draws_are_reproducible():
    cfg = DecompConfig(N=50.0, K=8.0, t=200.0)
    first = poisson_draws(cfg, 3, 5, seed=7)
    assert first == poisson_draws(cfg, 3, 5, seed=7)
    for a, x, v in first:
        assert math.gcd(a, 3) == 1 and 2 < a <= 5
        assert 0.0 <= x < 1.0 and cfg.K <= v < 2 * cfg.K


def test_poisson_caps():
    cfg = DecompConfig(N=50.0, K=8.0, t=200.0)
    with pytest.raises(ResourceLimitError):
        poisson_report(cfg, 7, 1, 0.3, 0.0)
    with pytest.raises(DomainError):
        poisson_report(cfg, 3, 3, 0.3, 0.0)


@pytest.mark.slow
def test_poisson_dual_matches_direct():
    cfg = DecompConfig(N=50.0, K=8.0, t=200.0)
    report = poisson_report(cfg, 3, 4, 0.3, 0.0)
    assert report.residual <= 1e-3
    assert report.truncation_change <= 1e-6


def test_i_one_vanishes_for_positive_m(desk):
    assert i_one_shape(desk, 1, 1, 0.0) == 0j


def test_istar_grid_points(desk):
    grid = istar_grid(desk)
    assert len(grid) == 27
    assert all(m < 0 and math.gcd(-m, q) == 1 for q, m, _ in grid)
    assert {tau for _, _, tau in grid} == {-desk.K, 0.0, desk.K}


@pytest.mark.slow
def test_decomposition_and_delta_collapse(form):
    cfg = DecompConfig(N=60.0, K=8.0, t=100.0, Q=3.0)
    report = decompose(form, cfg)
    assert report.residual <= 1e-2
    assert report.frame_count == len(report.frame_table)
    direct = s_of_n(form, cfg.N, cfg.t, cfg.V)
    assert abs(s_of_n_via_delta(form, cfg) - direct) / abs(direct) <= 1e-8


def test_i_star_star_rejects_bad_m(istar_desk):
    with pytest.raises(DomainError):
        i_star_star(istar_desk, 2, 0, 0.0)
    with pytest.raises(DomainError):
        i_star_star(istar_desk, 2, -4, 0.0)


@pytest.mark.slow
def test_i_star_star_is_trivially_bounded(istar_desk):
    q, m, tau = istar_grid(istar_desk)[0]
    value = i_star_star(istar_desk, q, m, tau)
    assert math.isfinite(abs(value))
    assert abs(value) <= 1.1


def test_calibrate_c4_freezes_ratio_to_shape(istar_desk, tmp_path, monkeypatch):
    calls = []

    def fake_i_star_star(cfg, q, m, tau):
        calls.append((q, m, tau))
        return 0.5 + 0.25j

    monkeypatch.setattr(decomp_service, "i_star_star", fake_i_star_star)
    store = CalibrationStore(tmp_path / CALIBRATION_FILE)
    reference = next(p for p in istar_grid(istar_desk) if i_one_shape(istar_desk, *p) != 0)

    c4 = calibrate_c4(istar_desk, store=store)
    assert c4 == pytest.approx((0.5 + 0.25j) / i_one_shape(istar_desk, *reference))
    assert calibrate_c4(istar_desk, store=store) == c4
    assert calls == [reference]
    # I_1 reproduces I** at the reference point by construction
    assert i_one(istar_desk, *reference, store=store) == pytest.approx(0.5 + 0.25j)
    assert i_one(istar_desk, *reference, c4=2.0) == pytest.approx(2.0 * i_one_shape(istar_desk, *reference))


def test_calibrate_c4_rejects_vanishing_reference(istar_desk, tmp_path):
    with pytest.raises(DomainError):
        calibrate_c4(istar_desk, reference=(1, 1, 0.0), store=CalibrationStore(tmp_path / CALIBRATION_FILE))


def test_i_one_needs_calibrated_c4(istar_desk, tmp_path):
    q, m, tau = istar_grid(istar_desk)[0]
    with pytest.raises(DomainError):
        i_one(istar_desk, q, m, tau, store=CalibrationStore(tmp_path / CALIBRATION_FILE))


@pytest.mark.parametrize("x", [0.25, 0.5, 1.0])
def test_v_stationary_point_zeroes_phase_slope(istar_desk, x):
    for q, m, tau in istar_grid(istar_desk):
        v0 = v_stationary_point(istar_desk, q, m, tau, x)
        phase = v_phase(istar_desk, q, m, tau, x).phase
        slopes = phase([v0 - 0.05, v0, v0 + 0.05], 1)[1]
        assert abs(slopes[1]) <= 1e-9
        assert slopes[0] < 0.0 < slopes[2]


def test_v_stationary_residual_over_grid(istar_desk):
    assert v_stationary_residual(istar_desk, istar_grid(istar_desk)) <= 1e-10


def test_v_phase_domain(istar_desk):
    with pytest.raises(DomainError):
        v_phase(istar_desk, 1, 1, 0.0, 0.5)
    with pytest.raises(DomainError):
        v_phase(istar_desk, 1, -1, 0.0, 1.5)


def test_conjugate_partner(form, small):
    assert conjugate_partner_residual(form, small) <= 1e-6


def test_s_plus_minus_matches_decompose(form, small):
    report = decompose(form, small)
    assert s_plus_minus(form, small) == (report.s_plus, report.s_minus)


def test_poisson_dual_m_sum_rejects_bad_residue():
    cfg = DecompConfig(N=50.0, K=8.0, t=200.0)
    with pytest.raises(DomainError):
        poisson_dual_m_sum(cfg, 3, 6, 0.3, 0.0)


@pytest.mark.slow
def test_poisson_dual_m_sum_matches_direct():
    cfg = DecompConfig(N=50.0, K=8.0, t=200.0)
    direct, dual, residual = poisson_dual_m_sum(cfg, 3, 4, 0.3, 0.0)
    assert residual == abs(direct - dual) / abs(direct)
    assert residual <= 1e-3
    assert direct == poisson_report(cfg, 3, 4, 0.3, 0.0).direct
