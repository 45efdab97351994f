import cmath
import math
from dataclasses import replace

import numpy as np
import pytest

from services.errors import DomainError
from services.oscillatory_service import (
    conductor_kernel,
    error_slope,
    first_branch_bound,
    fresnel_profile,
    linear_profile,
    oracle_quadrature,
    oracle_quadrature_2d,
    profile_constants,
    radial_quadratic_profile,
    second_branch_expand,
    second_derivative_bound_2d,
    stationary_point,
    w_dagger,
    w_dagger_main,
)
from services.window_service import make_bump


@pytest.fixture(scope="module")
def centred_bump():
    return make_bump(-1.0, 1.0)


@pytest.fixture(scope="module")
def unit_bump():
    return make_bump(1.0, 2.0, normalized=True)


def test_first_branch_bound_for_linear_phase(centred_bump):
    # Theta = Lambda = B, Omega = Omega_g = 1 gives 3/B^2
    assert first_branch_bound(linear_profile(100.0, centred_bump)) == pytest.approx(3e-4)


def test_linear_phase_is_small(centred_bump):
    profile = linear_profile(100.0, centred_bump)
    assert abs(oracle_quadrature(profile)) <= first_branch_bound(profile)


def test_first_branch_needs_lambda(centred_bump):
    with pytest.raises(DomainError):
        first_branch_bound(fresnel_profile(100.0, centred_bump))


def test_fresnel_stationary_point(centred_bump):
    assert stationary_point(fresnel_profile(1e3, centred_bump)) == pytest.approx(0.0, abs=1e-10)


def test_fresnel_main_term(centred_bump):
    scale = 1e3
    profile = fresnel_profile(scale, centred_bump)
    expansion = second_branch_expand(profile)
    expected = math.exp(-1.0) * cmath.exp(1j * math.pi / 4.0) / math.sqrt(2.0 * scale)
    assert expansion.main == pytest.approx(expected, rel=1e-12)
    assert abs(oracle_quadrature(profile) - expansion.main) <= expansion.error_bound


def test_second_branch_rejects_flat_phase(centred_bump):
    with pytest.raises(DomainError):
        second_branch_expand(linear_profile(100.0, centred_bump))


def test_fresnel_needs_straddling_window():
    with pytest.raises(DomainError):
        fresnel_profile(10.0, make_bump(1.0, 2.0))


def test_profile_constants(centred_bump):
    constants = profile_constants(fresnel_profile(50.0, centred_bump))
    assert constants["c_phase"] == pytest.approx(2.0)
    assert constants["endpoint_amplitude"] == 0.0


def test_error_slope_recovers_power():
    params = [1e2, 1e3, 1e4]
    assert error_slope(params, [p ** -1.5 for p in params]) == pytest.approx(-1.5)


def test_w_dagger_at_zero_frequency(unit_bump):
    assert w_dagger(unit_bump, 0.0, 1.0 + 0j) == pytest.approx(1.0, abs=1e-11)


def test_w_dagger_needs_positive_support(centred_bump):
    with pytest.raises(DomainError):
        w_dagger(centred_bump, 1.0, 1.0 + 0j)


def test_w_dagger_main_outside_support(unit_bump):
    # x0 = beta/(2 pi r) = 5 lies outside [1, 2]
    expansion = w_dagger_main(unit_bump, 100.0 / (2 * math.pi * 5.0), complex(1.0, 100.0))
    assert expansion.main == 0j
    assert expansion.stationary_point is None
    with pytest.raises(DomainError):
        w_dagger_main(unit_bump, 0.0, complex(1.0, 100.0))


def test_conductor_kernel_diagonal_and_conjugate(unit_bump):
    assert conductor_kernel(100, 100, 10.0, unit_bump) == pytest.approx(1.0, abs=1e-11)
    forward = conductor_kernel(105, 100, 10.0, unit_bump)
    backward = conductor_kernel(100, 105, 10.0, unit_bump)
    assert abs(forward - np.conj(backward)) < 1e-10


def test_radial_phase_factorizes(centred_bump):
    # e(B(x^2 + y^2)) W(x) W(y) splits into two Fresnel integrals
    two_d = oracle_quadrature_2d(radial_quadratic_profile(20.0, centred_bump))
    one_d = oracle_quadrature(fresnel_profile(20.0, centred_bump))
    assert abs(two_d - one_d ** 2) <= 1e-8


def test_second_derivative_bound_for_radial_phase(centred_bump):
    B = 100.0
    # var(g) = (int |W'|)^2 = (2 W(0))^2 and r1 = r2 = sqrt(2B)
    expected = (2.0 * centred_bump(0.0)) ** 2 / (2.0 * B)
    assert second_derivative_bound_2d(radial_quadratic_profile(B, centred_bump)) == pytest.approx(expected, rel=1e-6)


def test_second_derivative_bound_checks_hessian(centred_bump):
    profile = radial_quadratic_profile(100.0, centred_bump)
    with pytest.raises(DomainError):
        second_derivative_bound_2d(replace(profile, r1=2.0 * profile.r1))


def test_zero_amplitude_in_two_dimensions(centred_bump):
    def silent(X, Y):
        return np.zeros_like(X), np.zeros_like(X)

    profile = replace(radial_quadratic_profile(100.0, centred_bump), amplitude=silent)
    assert second_derivative_bound_2d(profile) == 0.0
    assert oracle_quadrature_2d(profile) == 0
