import cmath
import math

import numpy as np
import pytest

from services.errors import ConvergenceError
from services.quadrature_service import gauss_legendre, oscillatory_quadrature


def test_gauss_legendre_is_exact_on_polynomials():
    nodes, weights = gauss_legendre(8)
    # degree 15 is the exactness limit of 8 nodes
    assert float(np.sum(weights * nodes ** 14)) == pytest.approx(2.0 / 15.0, rel=1e-13)
    assert not nodes.flags.writeable


@pytest.mark.parametrize("frequency", [0.0, 3.25, 100.5, 2000.0])
def test_pure_exponential(frequency):
    def integrand(x):
        return np.exp(2j * math.pi * frequency * x)

    result = oscillatory_quadrature(integrand, 0.0, 1.0, frequency=lambda x: np.full_like(x, frequency))
    if frequency == 0.0:
        expected = 1.0
    else:
        expected = (cmath.exp(2j * math.pi * frequency) - 1.0) / (2j * math.pi * frequency)
    assert abs(result.value - expected) < 1e-11


def test_batched_integrand_shares_mesh():
    scales = np.array([[1.0], [2.0], [3.0]])
    result = oscillatory_quadrature(lambda x: scales * x[None, :] ** 2, 0.0, 3.0)
    np.testing.assert_allclose(np.real(result.value), [9.0, 18.0, 27.0], rtol=1e-13)


def test_panel_budget_exhausted():
    with pytest.raises(ConvergenceError):
        oscillatory_quadrature(
            lambda x: np.exp(2j * math.pi * 1e4 * x), 0.0, 1.0,
            frequency=lambda x: np.full_like(x, 1e4), max_panels=16,
        )
