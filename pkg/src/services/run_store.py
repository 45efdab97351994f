"""
Run Store

Persists RunRecords as one JSON document per run under runs/ (exclusive
create, so an existing record is never rewritten) and check tables as CSV
under out/ with 17 significant digits and a fixed column order.
"""

import json
from datetime import datetime
from pathlib import Path
from typing import Any, List, Union

import numpy as np
import pandas as pd

from models.runs import RunRecord
from services.checks.base import CheckResult
from services.lcrit_service import emit_plot_script

CSV_FLOAT_FORMAT = "%.17g"


def _json_default(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, datetime):
        return value.isoformat()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return str(value)


def dump_json(data: Any, indent: int = 2) -> str:
    """json.dumps that also accepts numpy scalars, complex numbers and datetimes."""
    return json.dumps(data, default=_json_default, indent=indent, sort_keys=True)


def record_filename(record: RunRecord) -> str:
    stamp = record.started_at.strftime("%Y%m%dT%H%M%S%fZ")
    return f"{stamp}_{record.run_id}.json"


class RunStore:
    """Writes run outputs under a runs directory and an output directory."""

    def __init__(self, runs_dir: Union[str, Path], out_dir: Union[str, Path]):
        self.runs_dir = Path(runs_dir)
        self.out_dir = Path(out_dir)

    def write_record(self, record: RunRecord) -> Path:
        """
        Raises:
            FileExistsError: If a record with the same name already exists
        """
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        path = self.runs_dir / record_filename(record)
        with open(path, "x", encoding="utf-8") as handle:
            handle.write(dump_json(record.model_dump()))
            handle.write("\n")
        return path

    def write_table(self, name: str, table: pd.DataFrame) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / f"{name}.csv"
        table.to_csv(path, float_format=CSV_FLOAT_FORMAT, index=False, lineterminator="\n")
        return path

    def write_tables(self, check_id: str, result: CheckResult) -> List[str]:
        """CSV per table named <check_id>_<table>, plus a plot script where requested."""
        outputs = []
        for table_name, table in result.tables.items():
            path = self.write_table(f"{check_id}_{table_name}", table)
            outputs.append(str(path))
            if table_name in result.plots:
                outputs.append(str(emit_plot_script(path)))
        return outputs

    def list_records(self) -> List[RunRecord]:
        if not self.runs_dir.exists():
            return []
        return [
            RunRecord(**json.loads(path.read_text(encoding="utf-8")))
            for path in sorted(self.runs_dir.glob("*_*.json"))
        ]
