"""
Structured event logging.

One JSON object per line on stderr, so report JSON printed on stdout
stays machine-readable.
"""

import json
import sys
from datetime import datetime, timezone
from typing import Any, Optional


def log_event(event: str, run_id: Optional[str] = None, **fields: Any) -> None:
    """
    Emit a structured log line.

    Args:
        event: Event name (e.g. "run_started", "check_failed")
        run_id: Run identifier when the event belongs to a run
        **fields: Additional JSON-serializable payload
    """
    log_data = {
        "event": event,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if run_id is not None:
        log_data["run_id"] = run_id
    log_data.update(fields)
    try:
        line = json.dumps(log_data, default=str)
    except (TypeError, ValueError) as e:
        line = json.dumps({"event": "log_serialization_error", "error": str(e), "source_event": event})
    print(line, file=sys.stderr)
