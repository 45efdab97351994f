import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from services.errors import DomainError
from services.forms_service import get_form_service
from services.voronoi_service import (
    bessel_hankel,
    bessel_j,
    bessel_series,
    choose_n_cut,
    gamma_ratio,
    phi,
    phi_derivative,
    scan_switch_point,
    voronoi_check,
    voronoi_lhs,
)
from services.window_service import make_bump


@pytest.mark.parametrize("order", [0, 1, 11])
def test_bessel_matches_scipy(order):
    x = np.geomspace(0.05, 2000.0, 400)
    np.testing.assert_allclose(bessel_j(order, x), special.jv(order, x), rtol=0, atol=1e-9)


def test_bessel_scalar_and_domain():
    assert isinstance(bessel_j(11, 30.0), float)
    with pytest.raises(DomainError):
        bessel_j(11, 0.0)
    with pytest.raises(DomainError):
        bessel_j(-1, 1.0)


@given(st.floats(min_value=0.5, max_value=1000.0))
def test_phi_has_unit_modulus(tau):
    assert abs(phi(tau)) == pytest.approx(1.0, abs=1e-10)
    assert abs(phi(-tau)) == pytest.approx(1.0, abs=1e-10)


def test_gamma_ratio_near_pole():
    with pytest.raises(DomainError):
        gamma_ratio(-11.0 + 1e-10j, 12)
    assert np.isfinite(abs(gamma_ratio(-11.5, 12)))


def test_phi_undefined_at_zero():
    with pytest.raises(DomainError):
        phi(0.0)


@pytest.mark.slow
def test_voronoi_sides_agree():
    form = get_form_service().get_form(100_000)
    F = make_bump(10.0, 20.0)
    report = voronoi_check(form, 1, 3, F)
    assert report.n_cut == choose_n_cut(form, 3, F)
    assert report.relative_residual <= 1e-4
    assert report.lhs == pytest.approx(voronoi_lhs(form, 1, 3, F))


def test_phi_derivative_decays():
    scaled = [abs(tau * phi_derivative(tau)) for tau in (10.0, 100.0, 1000.0)]
    assert scaled[0] > scaled[1] > scaled[2]
    # Stirling: Re psi(6 + i tau/2) - log(tau/2) = (181/3)/tau^2 + O(tau^-4)
    assert 1000.0 ** 2 * abs(phi_derivative(1000.0)) == pytest.approx(181.0 / 3.0, rel=1e-2)


def test_scan_switch_point_finds_agreeing_run():
    x0 = scan_switch_point(11)
    grid = x0 + 0.25 * np.arange(8)
    envelope = np.sqrt(2.0 / (np.pi * grid))
    assert x0 >= 5.5
    assert np.all(np.abs(bessel_series(11, grid) - bessel_hankel(11, grid)) / envelope <= 1e-9)
