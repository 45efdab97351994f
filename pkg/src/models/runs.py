"""
Pydantic models for run records, fitted constants and error reports.

The RunRecord JSON schema is published in contracts/run-record.schema.json.
"""

from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class ErrorReport(BaseModel):
    """Error payload printed on stdout when a run fails."""
    detail: str
    error_code: str
    run_id: Optional[str] = None
    residual: Optional[str] = None


class RunRecord(BaseModel):
    """Append-only description of one verification or sweep execution."""
    run_id: str = Field(..., description="Unique run identifier")
    command: str = Field(..., description="Verb and target, e.g. 'verify delta'")
    params: Dict[str, Any] = Field(default_factory=dict, description="Verb-specific parameters")
    config_snapshot: Dict[str, Any] = Field(..., description="Full parameter map, every tolerance included")
    results: Dict[str, Any] = Field(default_factory=dict, description="Operation-specific payload")
    residuals: Dict[str, float] = Field(default_factory=dict, description="Named residuals")
    tolerances: Dict[str, float] = Field(default_factory=dict, description="Tolerance per asserted residual")
    passed: bool = Field(..., description="True iff every asserted residual is within tolerance")
    failing_residual: Optional[str] = Field(None, description="First residual outside tolerance")
    error: Optional[ErrorReport] = Field(None, description="Set when the run raised")
    outputs: List[str] = Field(default_factory=list, description="Paths of CSV and script outputs")
    started_at: datetime = Field(..., description="Start timestamp (UTC)")
    duration: float = Field(..., ge=0, description="Wall time in seconds")
    artifact_version: str = Field(..., description="Workbench version that produced the record")


class FittedConstant(BaseModel):
    """A constant fitted once at a calibration point and frozen."""
    name: str
    value_re: float
    value_im: float = 0.0
    calibration_point: Dict[str, Any] = Field(default_factory=dict)
    safety: float = Field(1.0, ge=1.0)
    fitted_at: datetime
    run_id: Optional[str] = None

    @property
    def value(self) -> complex:
        return complex(self.value_re, self.value_im)


class CheckInfo(BaseModel):
    """Check metadata for `list`."""
    id: str
    name: str
    description: str
    version: str
    enabled: bool
    input_schema: Optional[Dict[str, Any]] = None

