import math

import pytest

from services.checks import VERIFY_TARGETS, check_registry
from services.checks.base import BaseCheck, CheckResult, RunContext
from services.checks.registry import CheckRegistry
from services.config import get_settings
from services.errors import DomainError


class EchoCheck(BaseCheck):
    check_id = "echo"
    name = "Echo"
    description = "Records its input as a residual"
    input_schema = {"required": ["value"], "optional": ["tolerance"]}

    def execute(self, context, **params):
        result = CheckResult()
        result.record("echo", params["value"], params.get("tolerance", 1.0))
        return result


def test_result_passes_within_tolerance():
    result = CheckResult()
    result.record("a", 1e-10, 1e-9)
    result.record("recorded_only", 1e9)
    assert result.passed
    assert result.failing_residual is None


def test_result_fails_on_first_violation_and_nan():
    result = CheckResult()
    result.record("a", 0.5, 1.0)
    result.record("b", math.nan, 1.0)
    result.record("c", 2.0, 1.0)
    assert not result.passed
    assert result.failing_residual == "b"


def test_band_residual():
    result = CheckResult()
    result.record_band("slope", -1.5, -1.8, -1.2)
    result.record_band("steep", -2.0, -1.8, -1.2)
    assert result.results == {"slope": -1.5, "steep": -2.0}
    assert result.residuals["slope_outside_band"] == 0.0
    assert result.residuals["steep_outside_band"] == pytest.approx(0.2)
    assert result.failing_residual == "steep_outside_band"


def test_validate_input():
    check = EchoCheck()
    check.validate_input(value=1.0)
    with pytest.raises(DomainError):
        check.validate_input()
    with pytest.raises(DomainError):
        check.validate_input(value=1.0, bogus=2)


def test_context_fit_uses_safety():
    context = RunContext(settings=get_settings())
    assert context.fit("sample", lambda: 0.75, {"x": 1}) == pytest.approx(1.5)
    assert context.fit("sample", lambda: 100.0, {"x": 1}) == pytest.approx(1.5)
    context.refit = True
    assert context.fit("sample", lambda: 1.0, {"x": 1}) == pytest.approx(2.0)


def test_context_to_dict():
    context = RunContext(settings=get_settings())
    data = context.to_dict()
    assert data["run_id"] == context.run_id
    assert data["runs_dir"] == str(context.runs_dir)


def test_registry_lifecycle():
    registry = CheckRegistry()
    registry.register(EchoCheck())
    assert registry.is_registered("echo") and len(registry.list_all()) == 1
    with pytest.raises(ValueError):
        registry.register(EchoCheck())
    registry.get("echo").enabled = False
    assert registry.get_enabled("echo") is None
    assert registry.list_all() == []
    assert registry.list_all(enabled_only=False) == [registry.get("echo")]


def test_registry_rejects_missing_id():
    class Nameless(EchoCheck):
        check_id = ""

    with pytest.raises(ValueError):
        CheckRegistry().register(Nameless())


def test_global_registry_holds_every_verb():
    ids = {check.check_id for check in check_registry.list_all(enabled_only=False)}
    assert set(VERIFY_TARGETS) <= ids
    assert {"eval-l", "sweep", "decompose"} <= ids
    for check_id in ids:
        info = check_registry.get(check_id).get_info()
        assert info["id"] == check_id
        assert info["description"]
