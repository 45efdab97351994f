"""
Decompose Check - S(N) = S+(N) + S-(N)

End-to-end decomposition through the delta symbol and the conductor
kernel, the collapse of the delta-weighted double sum back to S(N), and
optionally the conjugate-partner identity at t = 0.
"""

import math

from .base import BaseCheck, CheckResult, RunContext
from services.decomp_service import DecompConfig, conjugate_partner_residual, decompose, s_of_n_via_delta
from services.lcrit_service import s_of_n


class DecomposeCheck(BaseCheck):
    """|S - (S+ + S-)|/|S| at desk scale with Q = ceil((N/K)^(1/2)) unless given."""

    check_id = "decompose"
    name = "Decomposition"
    description = "S(N) against the sum of both sign branches of the delta decomposition"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": ["N", "K", "t", "Q", "partner"],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        settings = context.settings
        N = float(params.get("N") or 60)
        K = float(params.get("K") or 8)
        t = float(params.get("t") or 100)
        Q = float(params.get("Q") or math.ceil(math.sqrt(N / K)))
        cfg = DecompConfig(N=N, K=K, t=t, Q=Q)
        form = context.form(math.floor(cfg.U.support[1] * N) + 1)

        report = decompose(form, cfg, context.threads)
        result = CheckResult(tables={"frames": report.frame_table})
        result.record("decomposition", report.residual, settings.tol_decomp)

        collapsed = s_of_n_via_delta(form, cfg)
        s_n = s_of_n(form, N, t, cfg.V)
        result.record("delta_collapse", abs(collapsed - s_n) / abs(s_n), settings.tol_delta_collapse)

        if params.get("partner"):
            result.record("conjugate_partner", conjugate_partner_residual(form, cfg, context.threads), settings.tol_decomp)

        result.results = {"config": cfg.to_dict(), **report.to_dict()}
        return result
