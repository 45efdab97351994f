"""
Delta Check - Circle-Method Delta Symbol

Evaluates the expansion of delta(n = 0) over the acceptance grid and the
n = 0 weight sums.
"""

from .base import BaseCheck, CheckResult, RunContext
from services.delta_service import delta_grid, weight_sum


class DeltaCheck(BaseCheck):
    """delta_eval(n, Q) against [n = 0] for Q <= qmax, |n| <= nmax."""

    check_id = "delta"
    name = "Delta Symbol"
    description = "Kloosterman's expansion of delta(n) on the (n, Q) grid and the weight sums"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": ["qmax", "nmax", "weight_qmax"],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        qmax = int(params.get("qmax") or 15)
        nmax = int(params.get("nmax") or 50)
        weight_qmax = int(params.get("weight_qmax") or 50)
        settings = context.settings

        table = delta_grid(qmax, nmax, context.threads)
        worst = table.loc[table["residual"].abs().idxmax()]
        weights = {Q: weight_sum(Q) for Q in range(1, weight_qmax + 1)}

        result = CheckResult(tables={"grid": table})
        result.record("delta", float(table["residual"].abs().max()), settings.tol_delta)
        result.record(
            "weight_sum", max(abs(value - 1.0) for value in weights.values()), settings.tol_weight_sum
        )
        result.results = {
            "qmax": qmax,
            "nmax": nmax,
            "rows": len(table),
            "worst": {"n": int(worst["n"]), "Q": int(worst["Q"]), "residual": float(worst["residual"])},
            "weight_qmax": weight_qmax,
        }
        return result
