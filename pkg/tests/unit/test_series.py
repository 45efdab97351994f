import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from services.series import (
    compose_affine,
    euler_cube,
    jet_derivatives,
    jet_exp,
    jet_mul,
    jet_reciprocal,
    poly_mul_exact,
    power_jet,
)

coefficients = st.lists(st.integers(min_value=-10**6, max_value=10**6), min_size=1, max_size=40)


@given(coefficients, coefficients, st.integers(min_value=1, max_value=60))
@example(a=[0], b=[128], length=1)
@example(a=[0, 0], b=[-(10**6), 10**6], length=3)
def test_exact_product_matches_schoolbook(a, b, length):
    expected = [0] * length
    for i, x in enumerate(a[:length]):
        for j, y in enumerate(b[:length]):
            if i + j < length:
                expected[i + j] += x * y
    assert poly_mul_exact(a, b, length) == expected


def test_exact_product_keeps_large_integers():
    big = 10**40
    assert poly_mul_exact([big, -1], [big, 1], 3) == [big * big, big - big, -1]


def test_exact_product_with_zero_factor():
    assert poly_mul_exact([0], [128], 1) == [0]
    assert poly_mul_exact([0, 0, 0], [255, -256, 10**30], 4) == [0, 0, 0, 0]
    assert poly_mul_exact([1], [128, -129], 2) == [128, -129]


def test_euler_cube_is_jacobi_series():
    assert euler_cube(11) == [1, -3, 0, 5, 0, 0, -7, 0, 0, 0, 9]


def test_power_jet_of_square():
    jet = power_jet(np.array([3.0]), 2.0, 3)
    assert jet[:, 0].tolist() == [9.0, 6.0, 1.0, 0.0]


def test_exp_and_reciprocal_jets():
    x0 = np.array([0.3, 1.7])
    linear = np.zeros((5, 2))
    linear[0], linear[1] = x0, 1.0
    derivs = jet_derivatives(jet_exp(linear))
    np.testing.assert_allclose(derivs, np.exp(x0)[None, :].repeat(5, axis=0), rtol=1e-13)

    product = jet_mul(linear, jet_reciprocal(linear))
    np.testing.assert_allclose(product[0], 1.0)
    np.testing.assert_allclose(product[1:], 0.0, atol=1e-13)


def test_compose_affine_scales_coefficients():
    jet = np.ones((3, 1))
    assert compose_affine(jet, -2.0)[:, 0].tolist() == pytest.approx([1.0, -2.0, 4.0])
