"""
Base classes for the Check system.

Provides the abstract base class for verification checks and the data
structures passed into and out of them.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional
from uuid import uuid4

import pandas as pd

from services.calibration import CalibrationStore, get_calibration_store
from services.config import WorkbenchSettings
from services.errors import DomainError
from services.forms_service import CuspForm, get_form_service


@dataclass
class RunContext:
    """
    Everything a check needs from the run that invokes it.

    Serialized into the RunRecord through to_dict.
    """
    settings: WorkbenchSettings
    run_id: str = field(default_factory=lambda: str(uuid4()))
    started_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    refit: bool = False

    @property
    def threads(self) -> int:
        return self.settings.threads

    @property
    def out_dir(self) -> Path:
        return Path(self.settings.out_dir)

    @property
    def runs_dir(self) -> Path:
        return Path(self.settings.runs_dir)

    def form(self, n_max: Optional[int] = None) -> CuspForm:
        """The shared coefficient table, generated on first use."""
        n_max = self.settings.n_max if n_max is None else n_max
        return get_form_service().get_form(n_max, run_id=self.run_id)

    def calibration(self) -> CalibrationStore:
        return get_calibration_store(self.runs_dir)

    def fit(self, name: str, compute, calibration_point: Dict[str, Any]) -> float:
        """Frozen real constant `name`, fitted with the configured safety factor."""
        constant = self.calibration().fit(
            name,
            compute,
            calibration_point,
            safety=self.settings.fit_safety,
            refit=self.refit,
            run_id=self.run_id,
        )
        return constant.value_re

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "started_at": self.started_at.isoformat(),
            "threads": self.threads,
            "out_dir": str(self.out_dir),
            "runs_dir": str(self.runs_dir),
            "refit": self.refit,
        }


@dataclass
class CheckResult:
    """
    Result of a check.

    A residual is asserted when it has a tolerance; the check passes when
    every asserted residual is within it (value <= tolerance).
    """
    results: Dict[str, Any] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    plots: List[str] = field(default_factory=list)

    def record(self, name: str, value: float, tolerance: Optional[float] = None) -> None:
        self.residuals[name] = float(value)
        if tolerance is not None:
            self.tolerances[name] = float(tolerance)

    def record_band(self, name: str, value: float, low: float, high: float) -> None:
        """Assert low <= value <= high as a distance outside the band."""
        self.results[name] = float(value)
        self.record(f"{name}_outside_band", max(0.0, low - value, value - high), 0.0)

    @property
    def failing_residual(self) -> Optional[str]:
        for name, tolerance in self.tolerances.items():
            value = self.residuals.get(name, math.nan)
            if not value <= tolerance:
                return name
        return None

    @property
    def passed(self) -> bool:
        return self.failing_residual is None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "results": self.results,
            "residuals": self.residuals,
            "tolerances": self.tolerances,
            "tables": {name: len(table) for name, table in self.tables.items()},
            "passed": self.passed,
            "failing_residual": self.failing_residual,
        }


class BaseCheck(ABC):
    """
    Abstract base class for all checks.

    Checks implement execute() and describe themselves through check_id,
    name, description and version.

    Example implementation:
        class CharsumCheck(BaseCheck):
            check_id = "charsum"
            name = "Character Sum"
            description = "Exhaustive complete character sum identity"
            version = "1.0.0"

            def execute(self, context: RunContext, **params) -> CheckResult:
                ...
    """

    check_id: str = ""
    name: str = ""
    description: str = ""
    version: str = "1.0.0"
    enabled: bool = True

    input_schema: Dict[str, Any] = {
        "required": [],
        "optional": [],
    }

    @abstractmethod
    def execute(self, context: RunContext, **params) -> CheckResult:
        """
        Run the check.

        Args:
            context: RunContext of the invoking run
            **params: Check-specific parameters

        Returns:
            CheckResult with residuals, tolerances and tables

        Raises:
            WorkbenchError: On violated preconditions, budgets or convergence
        """

    def validate_input(self, **params) -> None:
        """
        Raises:
            DomainError: If a required parameter is missing or an unknown one is given
        """
        for required_field in self.input_schema.get("required", []):
            if params.get(required_field) is None:
                raise DomainError(f"Missing required parameter: {required_field}")
        known = set(self.input_schema.get("required", [])) | set(self.input_schema.get("optional", []))
        unknown = sorted(set(params) - known)
        if unknown:
            raise DomainError(f"Unknown parameters for '{self.check_id}': {', '.join(unknown)}")

    def get_info(self) -> Dict[str, Any]:
        return {
            "id": self.check_id,
            "name": self.name,
            "description": self.description,
            "version": self.version,
            "enabled": self.enabled,
            "input_schema": self.input_schema,
        }
