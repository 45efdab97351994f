"""
Hecke Check - Coefficient Table Exactness

Exact Hecke relations, Deligne's bound and Rankin-Selberg averages on the
generated coefficients of Delta.
"""

from .base import BaseCheck, CheckResult, RunContext
from services.forms_service import check_deligne, check_hecke, rankin_band

RANKIN_POINTS = (1_000, 10_000, 100_000)


class HeckeCheck(BaseCheck):
    """Multiplicativity and prime-power recursion as exact integer identities."""

    check_id = "hecke"
    name = "Hecke Relations"
    description = "Exact Hecke relations, |lambda(n)| <= d(n), and the Rankin band"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": ["limit", "nmax"],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        settings = context.settings
        limit = int(params.get("limit") or 10_000)
        n_max = int(params.get("nmax") or settings.n_max)
        form = context.form(max(n_max, limit))

        report = check_hecke(form, limit)
        deligne = check_deligne(form)
        xs = [x for x in RANKIN_POINTS if x <= form.n_max]
        ratios, band = rankin_band(form, xs)

        result = CheckResult()
        result.record("hecke_violations", len(report.violations), 0.0)
        result.record("deligne_violations", deligne, 0.0)
        result.record("rankin_band", band, settings.rankin_band)
        result.results = {
            "n_max": form.n_max,
            "limit": limit,
            "hecke": report.to_dict(),
            "rankin_ratios": {str(x): value for x, value in ratios.items()},
        }
        return result
