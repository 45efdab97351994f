"""
Stationary Check - One-Dimensional and Two-Dimensional Stationary Phase

Fresnel sweep against the second-branch leading term, the linear-phase
family against the first-branch bound, and the radial quadratic phase
against the second-derivative bound in two variables.
"""

from typing import Dict, List

import pandas as pd

from .base import BaseCheck, CheckResult, RunContext
from services.oscillatory_service import (
    error_slope,
    first_branch_bound,
    fresnel_profile,
    linear_profile,
    oracle_quadrature,
    oracle_quadrature_2d,
    radial_quadratic_profile,
    second_branch_expand,
    second_derivative_bound_2d,
)
from services.window_service import make_bump

FRESNEL_SCALES = (1e2, 1e3, 1e4)
LINEAR_SLOPES = (1e2, 1e3, 1e4, 1e5)
RADIAL_SCALES = (1e2, 1e3)

SWEEP_COLUMNS = ["parameter", "oracle_re", "oracle_im", "main_re", "main_im", "bound", "ratio"]


def comparison_row(parameter: float, oracle: complex, main: complex, bound: float) -> Dict[str, float]:
    return {
        "parameter": parameter,
        "oracle_re": oracle.real,
        "oracle_im": oracle.imag,
        "main_re": main.real,
        "main_im": main.imag,
        "bound": bound,
        "ratio": abs(oracle - main) / bound,
    }


class StationaryCheck(BaseCheck):
    """|oracle - main| <= fitted * bound for the Fresnel, linear and radial families; Fresnel slope in band."""

    check_id = "stationary"
    name = "Stationary Phase"
    description = "Second-branch expansion, first-branch bound and the 2D second-derivative bound"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": [],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        settings = context.settings
        g = make_bump(-1.0, 1.0)
        result = CheckResult()

        fresnel: List[Dict[str, float]] = []
        for B in FRESNEL_SCALES:
            profile = fresnel_profile(B, g)
            expansion = second_branch_expand(profile)
            fresnel.append(comparison_row(B, oracle_quadrature(profile), expansion.main, expansion.error_bound))
        constant = context.fit(
            "stationary_constant", lambda: fresnel[0]["ratio"], {"profile": "fresnel", "B": FRESNEL_SCALES[0]}
        )
        for row in fresnel:
            result.record(f"stationary_ratio_B{row['parameter']:g}", row["ratio"], constant)
        errors = [row["ratio"] * row["bound"] for row in fresnel]
        result.record_band("stationary_slope", error_slope(FRESNEL_SCALES, errors), settings.slope_min, settings.slope_max)

        linear = []
        for B in LINEAR_SLOPES:
            profile = linear_profile(B, g)
            linear.append(comparison_row(B, oracle_quadrature(profile), 0j, first_branch_bound(profile)))
        # fitted over the whole family
        linear_constant = context.fit(
            "first_branch_constant",
            lambda: max(row["ratio"] for row in linear),
            {"profile": "linear", "B": list(LINEAR_SLOPES)},
        )
        for row in linear:
            result.record(f"first_branch_ratio_B{row['parameter']:g}", row["ratio"], linear_constant)

        radial = []
        for B in RADIAL_SCALES:
            profile = radial_quadratic_profile(B, g)
            radial.append(comparison_row(B, oracle_quadrature_2d(profile), 0j, second_derivative_bound_2d(profile)))
        radial_constant = context.fit(
            "second_derivative_constant", lambda: radial[0]["ratio"], {"profile": "radial", "B": RADIAL_SCALES[0]}
        )
        for row in radial:
            result.record(f"second_derivative_ratio_B{row['parameter']:g}", row["ratio"], radial_constant)

        result.tables = {
            "fresnel": pd.DataFrame(fresnel, columns=SWEEP_COLUMNS),
            "linear": pd.DataFrame(linear, columns=SWEEP_COLUMNS),
            "radial": pd.DataFrame(radial, columns=SWEEP_COLUMNS),
        }
        result.results.update({
            "stationary_constant": constant,
            "second_derivative_constant": radial_constant,
            "first_branch_constant": linear_constant,
            "first_branch_max_ratio": max(row["ratio"] for row in linear),
        })
        return result
