import json

import pytest

from services.config import WorkbenchSettings, get_settings, load_config, set_settings
from services.errors import ConfigError


def test_defaults():
    settings = WorkbenchSettings()
    assert settings.n_max == 100_000
    assert settings.epsilon == 0.02
    assert settings.fit_safety == 2.0
    assert settings.tol_delta == 1e-9


def test_key_value_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# desk run\nepsilon = 0.05\n\nthreads=4\n")
    loaded = load_config(path)
    assert loaded.settings.epsilon == 0.05
    assert loaded.settings.threads == 4
    assert loaded.sources == {"epsilon": "file", "threads": "file"}


def test_json_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 11, "tol_voronoi": 1e-5}))
    loaded = load_config(path)
    assert loaded.settings.seed == 11
    assert loaded.settings.tol_voronoi == 1e-5


def test_unknown_keys_are_ignored_and_reported(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("epsilon=0.03\nflux_capacitor=1\n")
    loaded = load_config(path)
    assert loaded.ignored_keys == ["flux_capacitor"]
    assert loaded.snapshot()["ignored_keys"] == ["flux_capacitor"]
    assert '"config_unknown_key"' in capsys.readouterr().err


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("epsilon=0.03\nthis line is wrong\n")
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert excinfo.value.line == 2
    assert str(excinfo.value).startswith("line 2:")


def test_invalid_value(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("threads=0\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_precedence(tmp_path, monkeypatch):
    path = tmp_path / "run.cfg"
    path.write_text("epsilon=0.05\nseed=1\nthreads=2\n")
    monkeypatch.setenv("WORKBENCH_SEED", "2")
    monkeypatch.setenv("WORKBENCH_THREADS", "3")
    loaded = load_config(path, overrides={"threads": 8, "epsilon": None})
    assert loaded.settings.epsilon == 0.05
    assert loaded.settings.seed == 2
    assert loaded.settings.threads == 8
    assert loaded.sources["threads"] == "flag"


def test_unknown_flag_key():
    with pytest.raises(ConfigError):
        load_config(overrides={"not_a_setting": 1})


def test_set_settings_is_seen_globally():
    settings = WorkbenchSettings(epsilon=0.1)
    set_settings(settings)
    assert get_settings() is settings
