"""
Run Orchestrator Service

Central coordinator for check runs. Builds the run context, executes the
check, and always logs and persists a RunRecord, whether the run passed,
failed a tolerance or raised.
"""

import math
import time
from typing import Any, Dict, Optional, Tuple

from models.runs import ErrorReport, RunRecord
from services.checks import check_registry
from services.checks.base import CheckResult, RunContext
from services.config import LoadedConfig, set_settings
from services.errors import ConfigError, ToleranceError, WorkbenchError
from services.events import log_event
from services.run_store import RunStore


class RunOrchestrator:
    """
    Orchestrates check runs.

    Responsibilities:
    - Build RunContext from the loaded configuration
    - Route the verb or verify target to its check
    - Turn a failing residual into a ToleranceError
    - Persist CSV tables and the RunRecord, and log the outcome
    """

    def invoke(
        self,
        check_id: str,
        params: Dict[str, Any],
        loaded: LoadedConfig,
        refit: bool = False,
        command: Optional[str] = None,
    ) -> Tuple[RunRecord, CheckResult]:
        """
        Run one check.

        Args:
            check_id: Registered check identifier
            params: Check parameters; None values are dropped
            loaded: Validated settings with provenance
            refit: Refit calibration constants instead of reusing frozen ones
            command: Command line label for the record (defaults to check_id)

        Returns:
            (RunRecord, CheckResult) of a passing run

        Raises:
            ConfigError: If the check is not registered or disabled
            ToleranceError: If an asserted residual is outside its tolerance
            WorkbenchError: If the check itself raised
        """
        start_time = time.time()
        check = check_registry.get_enabled(check_id)
        if not check:
            raise ConfigError(f"Check '{check_id}' not found or disabled")

        set_settings(loaded.settings)
        context = self._build_context(loaded, refit)
        params = {key: value for key, value in params.items() if value is not None}
        command = command or check_id
        log_event("run_started", run_id=context.run_id, command=command, params=params)

        result: Optional[CheckResult] = None
        error: Optional[BaseException] = None
        record: Optional[RunRecord] = None
        try:
            check.validate_input(**params)
            result = check.execute(context, **params)
            if not result.passed:
                name = result.failing_residual
                raise ToleranceError(name, result.residuals.get(name, math.nan), result.tolerances[name])
        except Exception as e:
            error = e
            if isinstance(e, WorkbenchError):
                e.run_id = context.run_id
            raise
        finally:
            record = self._finish(
                check_id=check.check_id,
                command=command,
                params=params,
                loaded=loaded,
                context=context,
                result=result,
                error=error,
                duration=time.time() - start_time,
            )

        return record, result

    def _build_context(self, loaded: LoadedConfig, refit: bool) -> RunContext:
        return RunContext(settings=loaded.settings, refit=refit)

    def _error_report(self, error: BaseException, run_id: str) -> ErrorReport:
        return ErrorReport(
            detail=str(error),
            error_code=getattr(error, "error_code", "internal_error"),
            run_id=run_id,
            residual=getattr(error, "residual", None),
        )

    def _finish(
        self,
        check_id: str,
        command: str,
        params: Dict[str, Any],
        loaded: LoadedConfig,
        context: RunContext,
        result: Optional[CheckResult],
        error: Optional[BaseException],
        duration: float,
    ) -> RunRecord:
        """Write outputs and the record, then log; write failures are logged, never raised."""
        store = RunStore(context.runs_dir, context.out_dir)
        outputs = []
        if result is not None:
            try:
                outputs = store.write_tables(check_id, result)
            except OSError as e:
                log_event("record_write_error", run_id=context.run_id, target="tables", error=str(e))

        passed = error is None and result is not None and result.passed
        failing = result.failing_residual if result is not None else None
        record = RunRecord(
            run_id=context.run_id,
            command=command,
            params=params,
            config_snapshot={**loaded.snapshot(), "context": context.to_dict()},
            results=result.results if result is not None else {},
            residuals=result.residuals if result is not None else {},
            tolerances=result.tolerances if result is not None else {},
            passed=passed,
            failing_residual=failing,
            error=self._error_report(error, context.run_id) if error is not None else None,
            outputs=outputs,
            started_at=context.started_at,
            duration=duration,
            artifact_version=loaded.settings.artifact_version,
        )
        record_path = None
        try:
            record_path = str(store.write_record(record))
        except OSError as e:
            log_event("record_write_error", run_id=context.run_id, target="record", error=str(e))

        if not passed:
            log_event(
                "check_failed",
                run_id=context.run_id,
                command=command,
                failing_residual=failing,
                value=result.residuals.get(failing) if failing else None,
                tolerance=result.tolerances.get(failing) if failing else None,
                error=str(error) if error is not None else None,
            )
        log_event(
            "run_finished",
            run_id=context.run_id,
            command=command,
            status="passed" if passed else "failed",
            duration=duration,
            outputs=outputs,
            record=record_path,
        )
        return record


# Global singleton instance
run_orchestrator = RunOrchestrator()


def get_orchestrator() -> RunOrchestrator:
    """Get the global orchestrator instance."""
    return run_orchestrator
