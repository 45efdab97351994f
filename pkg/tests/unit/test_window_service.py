import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from services.errors import DomainError
from services.window_service import (
    WindowKind,
    make_bump,
    make_plateau,
    partition_of_unity,
    partition_sum,
    reflect,
    window_integral,
)


@given(st.floats(min_value=1.0, max_value=500.0), st.floats(min_value=-1.0, max_value=1.0))
def test_partition_sums_to_one(range_bound, fraction):
    windows = partition_of_unity(range_bound)
    x = fraction * range_bound
    assert partition_sum(windows, x)[0] == pytest.approx(1.0, abs=1e-12)


def test_partition_labels_are_dyadic():
    labels = sorted(w.label for w in partition_of_unity(20.0))
    assert labels == [-16, -8, -4, -2, -1, 0, 1, 2, 4, 8, 16]


def test_bump_vanishes_outside_support():
    bump = make_bump(1.0, 2.0)
    assert bump(0.5) == 0.0
    assert bump(2.5) == 0.0
    assert bump(1.5) == pytest.approx(np.exp(-1.0))
    assert bump.kind is WindowKind.BUMP


def test_normalized_bump_integrates_to_one():
    assert window_integral(make_bump(1.0, 2.0, normalized=True)) == pytest.approx(1.0, abs=1e-12)


def test_plateau_is_one_inside():
    plateau = make_plateau(0.5, 1.0, 2.0, 2.5)
    values = plateau(np.linspace(1.0, 2.0, 11))
    np.testing.assert_allclose(values, 1.0)
    assert plateau.knots == [0.5, 1.0, 2.0, 2.5]


def test_derivatives_of_plateau_vanish_on_plateau():
    plateau = make_plateau(0.5, 1.0, 2.0, 2.5)
    derivs = plateau.derivatives(np.array([1.25, 1.75]), 3)
    np.testing.assert_allclose(derivs[1:], 0.0, atol=1e-12)


def test_reflect_mirrors_values_and_derivatives():
    bump = make_bump(1.0, 2.0)
    mirrored = reflect(bump)
    assert mirrored.support == (-2.0, -1.0)
    x = np.array([1.2, 1.6])
    np.testing.assert_allclose(mirrored(-x), bump(x))
    np.testing.assert_allclose(mirrored.derivatives(-x, 1)[1], -bump.derivatives(x, 1)[1])


def test_derivative_bounds_recorded():
    bump = make_bump(-1.0, 1.0)
    assert len(bump.derivative_bounds) == 5
    assert bump.derivative_bounds[0] == pytest.approx(np.exp(-1.0))


def test_degenerate_windows_rejected():
    with pytest.raises(DomainError):
        make_bump(2.0, 1.0)
    with pytest.raises(DomainError):
        make_plateau(0.0, 2.0, 1.0, 3.0)
    with pytest.raises(DomainError):
        partition_of_unity(0.5)
