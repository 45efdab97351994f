"""
Istar Check - Main Term of the Double Integral I**

Nested quadrature of I**(q, m, tau) on a 3 x 3 x 3 grid, the calibrated
main term I_1 and the error budget B(C, tau) with its integrated form, and
the stationary point of the v-integral phase left by the two transforms.
"""

import math

import numpy as np
import pandas as pd

from .base import BaseCheck, CheckResult, RunContext
from services.decomp_service import (
    DecompConfig,
    calibrate_c4,
    dyadic_segments,
    error_budget,
    i_one,
    i_star_star,
    integrated_error_budget,
    istar_grid,
    segment_base,
    v_phase,
    v_stationary_point,
)
from services.parallel import parallel_map

ISTAR_COLUMNS = ["q", "m", "tau", "C", "istar_re", "istar_im", "ione_re", "ione_im", "budget", "ratio"]
BUDGET_COLUMNS = ["C", "T", "numeric", "closed_form", "relative_error", "shape", "ratio_to_shape"]
STATIONARY_X = 0.5


def v_stationary_residual(cfg: DecompConfig, grid, x: float = STATIONARY_X) -> float:
    """max |f'(v0)| of the v-integral phase over the grid, scaled by 2 pi / K."""
    slopes = [
        v_phase(cfg, q, m, tau, x).phase(np.array([v_stationary_point(cfg, q, m, tau, x)]), 1)[1][0]
        for q, m, tau in grid
    ]
    return float(np.max(np.abs(slopes))) * 2.0 * math.pi / cfg.K


class IstarCheck(BaseCheck):
    """|I**| <= 1.1 everywhere and |I** - I_1| <= fitted * B(C, tau) at every grid point."""

    check_id = "istar"
    name = "I** Decomposition"
    description = "I** against its calibrated main term within the error budget B(C, tau)"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": ["N", "K", "t", "Q"],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        settings = context.settings
        cfg = DecompConfig(
            N=float(params.get("N") or 30),
            K=float(params.get("K") or 6),
            t=float(params.get("t") or 200),
            Q=float(params.get("Q") or 3),
        )
        c4 = calibrate_c4(cfg, store=context.calibration(), refit=context.refit, run_id=context.run_id)
        grid = istar_grid(cfg)
        values = parallel_map(lambda p: i_star_star(cfg, *p), grid, context.threads)

        rows = []
        for (q, m, tau), value in zip(grid, values):
            C = segment_base(q)
            main = i_one(cfg, q, m, tau, c4=c4)
            budget = error_budget(cfg, C, tau)
            rows.append({
                "q": q, "m": m, "tau": tau, "C": C,
                "istar_re": value.real, "istar_im": value.imag,
                "ione_re": main.real, "ione_im": main.imag,
                "budget": budget,
                "ratio": abs(value - main) / budget,
            })
        table = pd.DataFrame(rows, columns=ISTAR_COLUMNS)
        worst_ratio = float(table["ratio"].max())
        constant = context.fit("istar_constant", lambda: worst_ratio, {**cfg.to_dict(), "grid": len(grid)})

        result = CheckResult()
        result.record("istar_abs_max", max(abs(v) for v in values), settings.istar_bound)
        result.record("istar_constant_finite", 0.0 if math.isfinite(constant) else math.inf, 0.0)
        for row in rows:
            label = f"q{row['q']}_m{row['m']}_tau{row['tau']:g}"
            result.record(f"istar_ratio_{label}", row["ratio"], constant)
        result.record("v_stationary_derivative", v_stationary_residual(cfg, grid), settings.tol_v_stationary)

        budgets = []
        for C in dyadic_segments(cfg.Q):
            summary = integrated_error_budget(cfg, C)
            budgets.append({"C": C, **summary})
            result.record(f"budget_closed_form_C{C:g}", summary["relative_error"], settings.tol_budget_closed_form)

        result.tables = {"grid": table, "budget": pd.DataFrame(budgets, columns=BUDGET_COLUMNS)}
        result.results = {
            "config": cfg.to_dict(),
            "c4": [c4.real, c4.imag],
            "istar_constant": constant,
            "grid_max_ratio": worst_ratio,
        }
        return result
