"""
Charsum Check - Complete Character Sum

sum_{beta mod qq'} e(beta (a'q - aq' + n)/(qq')) = qq' [n = aq' - a'q (mod qq')]
over every pair of moduli up to a bound and every residue n.
"""

from .base import BaseCheck, CheckResult, RunContext
from services.decomp_service import character_sum_table


class CharsumCheck(BaseCheck):
    """Exhaustive identity check; one table row per (q, q', a, a')."""

    check_id = "charsum"
    name = "Character Sum"
    description = "Exhaustive complete character sum identity over small moduli"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": ["max"],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        bound = int(params.get("max") or 12)
        table = character_sum_table(bound)

        result = CheckResult(tables={"identity": table})
        result.record("charsum", float(table["max_residual"].max()), context.settings.tol_charsum)
        result.results = {"max": bound, "rows": len(table)}
        return result
