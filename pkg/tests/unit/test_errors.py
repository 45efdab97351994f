import pytest

from services.errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    ResourceLimitError,
    ToleranceError,
    WorkbenchError,
)


@pytest.mark.parametrize(
    "error, code",
    [
        (DomainError("x"), "domain_error"),
        (ResourceLimitError("x"), "resource_limit"),
        (ConvergenceError("x"), "convergence_failure"),
        (ToleranceError("delta", 1.0, 1e-9), "tolerance_violation"),
        (ConfigError("x"), "config_error"),
    ],
)
def test_error_codes(error, code):
    assert isinstance(error, WorkbenchError)
    assert error.error_code == code
    assert error.run_id is None


def test_domain_error_is_value_error():
    with pytest.raises(ValueError):
        raise DomainError("gcd(4, 6) != 1")


def test_tolerance_error_carries_residual():
    error = ToleranceError("voronoi_q3_a1_scale10", 2.5e-3, 1e-4)
    assert error.residual == "voronoi_q3_a1_scale10"
    assert error.value == 2.5e-3
    assert "2.500e-03" in str(error)


def test_config_error_line():
    assert str(ConfigError("empty key", line=7)) == "line 7: empty key"
    assert ConfigError("bad").line is None
