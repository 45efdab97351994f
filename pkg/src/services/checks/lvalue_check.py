"""
L-Value Checks - Critical-Line Evaluation

`verify lvalue` compares the smoothed approximate functional equation with
the incomplete-gamma oracle; `eval-l` and `sweep` evaluate L(1/2 + it)
at one point and along a grid.
"""

import math

import numpy as np

from .base import BaseCheck, CheckResult, RunContext
from services.decomp_service import default_windows
from services.lcrit_service import (
    SweepPlan,
    afe_length,
    convexity_sweep,
    l_value_afe,
    l_value_oracle,
    trivial_range_check,
)

ORACLE_POINTS = (10.0, 50.0, 100.0)
STABILITY_POINT = 10.0


class LValueCheck(BaseCheck):
    """AFE against oracle at t in {10, 50, 100}, conjugate symmetry, and length stability."""

    check_id = "lvalue"
    name = "L-Value Agreement"
    description = "Smoothed AFE against the incomplete-gamma oracle on the critical line"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": [],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        settings = context.settings
        form = context.form()
        result = CheckResult()
        values = {}
        for t in ORACLE_POINTS:
            afe = l_value_afe(form, t)
            oracle = l_value_oracle(form, t)
            values[str(t)] = {"afe": [afe.real, afe.imag], "oracle": [oracle.real, oracle.imag]}
            result.record(f"lvalue_t{t:g}", abs(afe - oracle), settings.tol_lvalue)
            mirror = l_value_afe(form, -t)
            result.record(f"conjugate_t{t:g}", abs(mirror - afe.conjugate()), settings.tol_conjugate)

        base = l_value_afe(form, STABILITY_POINT)
        longer = l_value_afe(form, STABILITY_POINT, settings.afe_precision ** 2)
        result.record("afe_length_stability", abs(longer - base), settings.tol_afe_stability)
        result.results = {
            "values": values,
            "afe_lengths": {str(t): afe_length(t) for t in ORACLE_POINTS},
            "smoothing": settings.afe_smoothing,
        }
        return result


class EvalLCheck(BaseCheck):
    """L(1/2 + it) at a single t by the smoothed AFE."""

    check_id = "eval-l"
    name = "Evaluate L"
    description = "L(1/2 + it, Delta) by the smoothed approximate functional equation"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": ["t"],
        "optional": [],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        t = float(params["t"])
        value = l_value_afe(context.form(), t)
        return CheckResult(results={
            "t": t,
            "re_L": value.real,
            "im_L": value.imag,
            "abs_L": abs(value),
            "length": afe_length(t),
        })


class SweepCheck(BaseCheck):
    """Bounded |L|/t^(1/2) and trivial range over a linear t-grid; dyadic sup and exponent recorded."""

    check_id = "sweep"
    name = "Convexity Sweep"
    description = "Critical-line sweep with dyadic sums and the fitted growth exponent"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": ["tmin", "tmax", "points", "plot"],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        settings = context.settings
        V, _ = default_windows()
        plan = SweepPlan.linear(
            float(params.get("tmin") or 10.0),
            float(params.get("tmax") or 200.0),
            int(params.get("points") or 20),
            settings.epsilon,
            V,
        )
        form = context.form()
        sweep = convexity_sweep(form, plan, context.threads)

        result = CheckResult(tables={"sweep": sweep.table, "dyadic": sweep.dyadic})
        if params.get("plot"):
            result.plots.append("sweep")
        finite = bool(np.all(np.isfinite(sweep.table["convexity_ratio"].to_numpy())))
        result.record("convexity_ratio_finite", 0.0 if finite else math.inf, 0.0)

        trivial = [trivial_range_check(form, t, V, settings.epsilon) for t in plan.t_grid]
        trivial_constant = context.fit(
            "trivial_range_constant",
            lambda: max(trivial),
            {"tmin": plan.t_grid[0], "tmax": plan.t_grid[-1], "points": len(plan.t_grid), "epsilon": settings.epsilon},
        )
        result.record("trivial_range_max", max(trivial), trivial_constant)
        result.results = {
            "plan": plan.to_dict(),
            "exponent": sweep.exponent,
            "max_convexity_ratio": sweep.max_convexity_ratio,
            "sup_observations": sweep.sup_observations,
            "trivial_range_constant": trivial_constant,
        }
        return result
