"""
Workbench configuration.

Settings are read from the environment (prefix WORKBENCH_, .env supported)
and can be layered with a config file and command-line flags through
load_config(). Precedence: defaults < file < environment < flags.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from services.errors import ConfigError
from services.events import log_event


class WorkbenchSettings(BaseSettings):
    """All tunables of a run; every numeric tolerance used by a check lives here."""

    model_config = SettingsConfigDict(env_prefix="WORKBENCH_", extra="ignore")

    # Form and coefficient cache
    weight: int = Field(12, description="Weight k of the level-1 eigenform")
    n_max: int = Field(100_000, ge=1, description="Coefficient cache length")
    max_coefficients: int = Field(2_000_000, ge=1, description="Memory budget for generate_tau")

    # Exponent bookkeeping
    epsilon: float = Field(0.02, gt=0, lt=0.5, description="Concrete value of every t^eps factor")

    # Quadrature
    quad_tol: float = Field(1e-12, ge=1e-13, description="Oracle quadrature tolerance")
    panel_order: int = Field(24, ge=4, le=128, description="Gauss-Legendre nodes per panel")
    panel_width: float = Field(1.0, gt=0, description="Panel width c in c/(1+|f'|)")
    max_panels: int = Field(4_000_000, ge=16, description="Panel budget per oracle evaluation")

    # Voronoi
    tail_budget: float = Field(1e-8, gt=0, description="Dual-sum truncation tail budget")

    # Nested transforms and random draws
    nested_work_cap: int = Field(2_000_000_000, ge=1, description="Multiply-add budget per nested transform pass")
    seed: int = Field(0, ge=0, description="Seed for randomized parameter draws")
    poisson_draws: int = Field(10, ge=1, description="Random (a, x, v) draws per Poisson check")

    # Fitted constants
    fit_safety: float = Field(2.0, ge=1.0, description="Multiplier applied when freezing a fitted constant")

    # Desk-scale caps
    decomp_n_cap: int = Field(500, ge=1)
    decomp_q_cap: int = Field(12, ge=1)
    poisson_q_cap: int = Field(5, ge=1)
    poisson_n_cap: int = Field(200, ge=1)

    # Critical-line evaluation
    afe_precision: float = Field(1e-10, gt=0, description="Truncation target of the smoothed AFE")
    afe_smoothing: float = Field(0.1, gt=0, le=1.0, description="Gaussian Mellin weight exp(A w^2)")

    # Conductor-lowering localization
    conductor_separation: float = Field(64.0, gt=0, description="Separation unit c in c*N/K for decay checks")

    # Acceptance tolerances
    tol_delta: float = 1e-9
    tol_weight_sum: float = 1e-12
    tol_voronoi: float = 1e-4
    tol_poisson: float = 1e-3
    tol_poisson_truncation: float = 1e-6
    tol_charsum: float = 1e-9
    tol_decomp: float = 1e-2
    tol_lvalue: float = 1e-6
    tol_conjugate: float = 1e-10
    tol_conductor_diagonal: float = 1e-10
    decay_ratio: float = 1e-3
    slope_min: float = -1.8
    slope_max: float = -1.2
    rankin_band: float = 1.5
    istar_bound: float = 1.1
    tol_gamma_reflection: float = 1e-8
    tol_budget_closed_form: float = 1e-6
    tol_afe_stability: float = 1e-8
    tol_delta_collapse: float = 1e-8
    tol_v_stationary: float = 1e-10

    # Execution
    threads: int = Field(1, ge=1)
    out_dir: str = "out"
    runs_dir: str = "runs"
    artifact_version: str = "1.0.0"


@dataclass
class LoadedConfig:
    """Result of load_config: validated settings plus provenance."""
    settings: WorkbenchSettings
    ignored_keys: List[str] = field(default_factory=list)
    sources: Dict[str, str] = field(default_factory=dict)

    def snapshot(self) -> Dict[str, Any]:
        """Full parameter map for RunRecord.config_snapshot."""
        data = self.settings.model_dump()
        data["ignored_keys"] = list(self.ignored_keys)
        return data


def _parse_key_value(text: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw!r}", line=lineno)
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError("empty key", line=lineno)
        values[key] = value.strip()
    return values


def read_config_file(path: Path) -> Dict[str, Any]:
    """
    Read a flat key=value or JSON config file.

    Args:
        path: File to read

    Returns:
        Raw key -> value map (values not yet validated)

    Raises:
        ConfigError: If the file is missing or malformed
    """
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(e.msg, line=e.lineno) from e
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        return data
    return _parse_key_value(text)


def _environment_values() -> Dict[str, Any]:
    env_settings = WorkbenchSettings()
    return env_settings.model_dump(include=env_settings.model_fields_set)


def load_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    run_id: Optional[str] = None,
) -> LoadedConfig:
    """
    Build settings from defaults, an optional file, the environment and flags.

    Args:
        path: Optional config file (key=value text or JSON)
        overrides: Command-line flag values; None entries are skipped
        run_id: Run identifier for warning events

    Returns:
        LoadedConfig with validated settings and the ignored unknown keys

    Raises:
        ConfigError: If the file is malformed or a value fails validation
    """
    known = set(WorkbenchSettings.model_fields)
    merged: Dict[str, Any] = {}
    sources: Dict[str, str] = {}
    ignored: List[str] = []

    if path is not None:
        for key, value in read_config_file(Path(path)).items():
            if key not in known:
                ignored.append(key)
                log_event("config_unknown_key", run_id=run_id, key=key, source=str(path))
                continue
            merged[key] = value
            sources[key] = "file"

    try:
        env_values = _environment_values()
    except ValidationError as e:
        raise ConfigError(f"invalid environment value: {e.errors()[0]['msg']}") from e
    for key, value in env_values.items():
        merged[key] = value
        sources[key] = "env"

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown flag key: {key}")
        merged[key] = value
        sources[key] = "flag"

    try:
        settings = WorkbenchSettings(**merged)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ()))
        raise ConfigError(f"invalid value for {where}: {first['msg']}") from e

    return LoadedConfig(settings=settings, ignored_keys=ignored, sources=sources)


_settings: Optional[WorkbenchSettings] = None


def get_settings() -> WorkbenchSettings:
    """Get the process-wide settings (environment and defaults only)."""
    global _settings
    if _settings is None:
        _settings = WorkbenchSettings()
    return _settings


def set_settings(settings: WorkbenchSettings) -> None:
    """Install the settings of the current run as the process-wide ones."""
    global _settings
    _settings = settings
