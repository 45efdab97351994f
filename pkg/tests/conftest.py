import os

import pytest
from hypothesis import HealthCheck, settings

from services import config
from services.config import load_config, set_settings
from services.forms_service import CuspForm, generate_tau

settings.register_profile(
    "workbench",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("workbench")


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Fresh settings per test, writing runs/ and out/ under tmp_path."""
    for key in list(os.environ):
        if key.startswith("WORKBENCH_"):
            monkeypatch.delenv(key)
    loaded = load_config(overrides={
        "runs_dir": str(tmp_path / "runs"),
        "out_dir": str(tmp_path / "out"),
    })
    set_settings(loaded.settings)
    yield loaded.settings
    monkeypatch.setattr(config, "_settings", None)


@pytest.fixture(scope="session")
def form():
    return CuspForm(weight=12, tau_cache=tuple(generate_tau(5000, max_coefficients=5000)))


@pytest.fixture
def dirs(tmp_path):
    return {"runs_dir": tmp_path / "runs", "out_dir": tmp_path / "out"}
