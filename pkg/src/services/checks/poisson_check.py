"""
Poisson Check - Dual m-Sum

Poisson rearrangement of the twisted m-sum into U dagger terms over the
residue class m = a_bar (mod q), over random (a, x, v) draws.
"""

import pandas as pd

from .base import BaseCheck, CheckResult, RunContext
from services.decomp_service import DecompConfig, poisson_draws, poisson_report

POISSON_COLUMNS = ["q", "a", "x", "v", "direct_re", "direct_im", "dual_re", "dual_im", "residual", "m_cut", "truncation_change"]

# (q, a, x, v) evaluated before the random draws
ANCHOR = (3, 1, 0.3, 0.0)


class PoissonCheck(BaseCheck):
    """Relative residual |direct - dual|/|direct| and the change from doubling m_cut."""

    check_id = "poisson"
    name = "Poisson Dual Sum"
    description = "Poisson summation of the m-sum against U dagger in residue classes"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": ["q", "N", "K", "t", "draws"],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        settings = context.settings
        cfg = DecompConfig(
            N=float(params.get("N") or 50),
            K=float(params.get("K") or 8),
            t=float(params.get("t") or 200),
        )
        draws = int(params.get("draws") or settings.poisson_draws)
        moduli = [int(params["q"])] if params.get("q") else list(range(1, settings.poisson_q_cap + 1))

        cases = []
        if ANCHOR[0] in moduli:
            cases.append(ANCHOR)
        for q in moduli:
            cases.extend((q, a, x, v) for a, x, v in poisson_draws(cfg, q, draws, settings.seed))

        result = CheckResult()
        rows = []
        for index, (q, a, x, v) in enumerate(cases):
            report = poisson_report(cfg, q, a, x, v)
            label = f"q{q}_case{index}"
            result.record(f"poisson_{label}", report.residual, settings.tol_poisson)
            result.record(f"truncation_{label}", report.truncation_change, settings.tol_poisson_truncation)
            rows.append({
                "q": q, "a": a, "x": x, "v": v,
                "direct_re": report.direct.real, "direct_im": report.direct.imag,
                "dual_re": report.dual.real, "dual_im": report.dual.imag,
                "residual": report.residual,
                "m_cut": report.m_cut,
                "truncation_change": report.truncation_change,
            })

        result.tables["draws"] = pd.DataFrame(rows, columns=POISSON_COLUMNS)
        result.results = {"config": cfg.to_dict(), "moduli": moduli, "draws": draws, "seed": settings.seed}
        return result
