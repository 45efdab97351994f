"""
Calibration Service

Fitted constants (the stationary-phase constant, the W dagger constant,
c4 and the I** error constant) are fitted once at a recorded calibration
point, multiplied by the configured safety factor where they bound an
error, and frozen in runs/calibration.json. Later runs reuse the frozen
value unless a refit is requested.
"""

import json
from datetime import datetime, timezone
from pathlib import Path
from threading import Lock
from typing import Any, Callable, Dict, Optional, Union

from models.runs import FittedConstant
from services.config import get_settings
from services.errors import DomainError
from services.events import log_event

CALIBRATION_FILE = "calibration.json"


class CalibrationStore:
    """JSON-backed map name -> FittedConstant."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = Lock()
        self._constants: Dict[str, FittedConstant] = {}
        if self.path.exists():
            raw = json.loads(self.path.read_text(encoding="utf-8"))
            self._constants = {name: FittedConstant(**data) for name, data in raw.items()}

    def get(self, name: str) -> Optional[FittedConstant]:
        return self._constants.get(name)

    def value(self, name: str) -> complex:
        """
        Frozen value of a constant.

        Raises:
            DomainError: If the constant has not been fitted
        """
        constant = self._constants.get(name)
        if constant is None:
            raise DomainError(f"constant '{name}' has not been calibrated")
        return constant.value

    def fit(
        self,
        name: str,
        compute: Callable[[], Union[float, complex]],
        calibration_point: Dict[str, Any],
        safety: float = 1.0,
        refit: bool = False,
        run_id: Optional[str] = None,
    ) -> FittedConstant:
        """
        Return the frozen constant, fitting it first if absent or if refit is set.

        compute() is only called when a fit happens; its value is multiplied
        by safety before freezing.
        """
        with self._lock:
            existing = self._constants.get(name)
            if existing is not None and not refit:
                return existing
            raw = complex(compute()) * safety
            constant = FittedConstant(
                name=name,
                value_re=raw.real,
                value_im=raw.imag,
                calibration_point=calibration_point,
                safety=safety,
                fitted_at=datetime.now(timezone.utc),
                run_id=run_id,
            )
            self._constants[name] = constant
            self._save()
        log_event(
            "calibration_fitted",
            run_id=run_id,
            name=name,
            value_re=constant.value_re,
            value_im=constant.value_im,
            safety=safety,
            calibration_point=calibration_point,
        )
        return constant

    def to_dict(self) -> Dict[str, Any]:
        return {name: c.model_dump(mode="json") for name, c in self._constants.items()}

    def _save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        tmp.replace(self.path)


_stores: Dict[Path, CalibrationStore] = {}


def get_calibration_store(runs_dir: Optional[Union[str, Path]] = None) -> CalibrationStore:
    """Get the store for a runs directory (configured runs_dir by default)."""
    directory = Path(runs_dir if runs_dir is not None else get_settings().runs_dir)
    path = (directory / CALIBRATION_FILE).resolve()
    if path not in _stores:
        _stores[path] = CalibrationStore(path)
    return _stores[path]
