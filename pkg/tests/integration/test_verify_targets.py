import pytest

from services.config import load_config
from services.run_orchestrator import get_orchestrator


@pytest.fixture
def loaded(dirs):
    return load_config(overrides={"threads": 4, **{k: str(v) for k, v in dirs.items()}})


@pytest.mark.slow
@pytest.mark.parametrize(
    "check_id, params",
    [
        ("hecke", {"limit": 5000}),
        ("voronoi", {"q": 2, "a": 1, "scale": 10}),
        ("stationary", {}),
        ("wdagger", {}),
        ("conductor", {}),
        ("poisson", {"q": 3, "draws": 2}),
        ("istar", {}),
        ("lvalue", {}),
        ("decompose", {"N": 60, "K": 8, "t": 100, "partner": True}),
    ],
)
def test_target_passes(loaded, dirs, check_id, params):
    record, result = get_orchestrator().invoke(check_id, params, loaded, command=f"verify {check_id}")
    assert record.passed, record.failing_residual
    assert record.tolerances
    for path in record.outputs:
        assert path.startswith(str(dirs["out_dir"]))


@pytest.mark.slow
def test_fitted_constants_are_reused(loaded):
    orchestrator = get_orchestrator()
    first, _ = orchestrator.invoke("wdagger", {}, loaded)
    second, _ = orchestrator.invoke("wdagger", {}, loaded)
    assert first.results["wdagger_constant"] == second.results["wdagger_constant"]
