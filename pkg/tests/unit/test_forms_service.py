import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from services.errors import DomainError, ResourceLimitError
from services.forms_service import (
    CuspForm,
    check_deligne,
    check_hecke,
    divisor_count,
    divisor_counts,
    generate_tau,
    get_form_service,
    load_coefficients,
    rankin_band,
    save_coefficients,
)

# tau(1..10), OEIS A000594
KNOWN_TAU = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]


def test_first_coefficients():
    assert generate_tau(10, max_coefficients=10) == KNOWN_TAU


def test_tau_at_prime_and_square(form):
    assert form.tau(11) == 534612
    assert form.tau(4) == form.tau(2) ** 2 - 2 ** 11


def test_hecke_relations_hold(form):
    report = check_hecke(form, 2000)
    assert report.passed
    assert report.pairs_checked > 0
    assert report.recursions_checked > 0


def test_hecke_detects_corruption(form):
    tau = list(form.tau_cache[:200])
    tau[5] += 1  # tau(6)
    report = check_hecke(CuspForm(weight=12, tau_cache=tuple(tau)), 200)
    assert not report.passed
    assert any("m=2 n=3" in v for v in report.violations)


def test_deligne_bound(form):
    assert check_deligne(form) == 0


def test_rankin_band_is_narrow(form):
    ratios, spread = rankin_band(form, [1000, 2000, 5000])
    assert set(ratios) == {1000, 2000, 5000}
    assert 1.0 <= spread < 1.5


@given(st.integers(min_value=1, max_value=3000))
def test_divisor_count_matches_sieve(n):
    assert divisor_count(n) == divisor_counts(3000)[n - 1]


def test_generate_tau_rejects_bad_length():
    with pytest.raises(DomainError):
        generate_tau(0)
    with pytest.raises(ResourceLimitError):
        generate_tau(101, max_coefficients=100)


def test_lambda_normalization(form):
    assert form.lambda_value(2) == pytest.approx(-24 / 2 ** 5.5)
    assert form.lambda_range(1, 3)[0] == 1.0


def test_cache_bounds(form):
    with pytest.raises(DomainError):
        form.tau(0)
    with pytest.raises(ResourceLimitError):
        form.tau(form.n_max + 1)
    with pytest.raises(ResourceLimitError):
        form.lambda_range(1, form.n_max + 1)


def test_table_must_start_with_one():
    with pytest.raises(DomainError):
        CuspForm(weight=12, tau_cache=(2, 3))


def test_save_and_load(tmp_path, form):
    small = CuspForm(weight=12, tau_cache=form.tau_cache[:50])
    path = tmp_path / "tau.txt"
    save_coefficients(small, path)
    assert path.read_text().splitlines()[0] == "weight=12 n_max=50"
    assert load_coefficients(path).tau_cache == small.tau_cache


def test_load_rejects_short_body(tmp_path):
    path = tmp_path / "tau.txt"
    path.write_text("weight=12 n_max=3\n1\n-24\n")
    with pytest.raises(DomainError):
        load_coefficients(path)


def test_service_serves_truncations():
    service = get_form_service()
    large = service.get_form(300)
    small = service.get_form(100)
    assert small.n_max == 100
    assert small.tau_cache == large.tau_cache[:100]
    assert math.isclose(small.lambda_value(7), large.lambda_value(7))
