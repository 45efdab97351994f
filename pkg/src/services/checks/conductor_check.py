"""
Conductor Check - Localization of the Conductor-Lowering Kernel

kernel(n, m) = (1/K) int (n/m)^(iv) V(v/K) dv is one on the diagonal and
negligible once |n - m| is a large multiple of N/K.
"""

import pandas as pd

from .base import BaseCheck, CheckResult, RunContext
from services.oscillatory_service import conductor_kernel, conductor_localization
from services.window_service import make_bump

LOCALIZATION_COLUMNS = ["separation", "r", "kernel_abs", "envelope"]


class ConductorCheck(BaseCheck):
    """Band envelope at 4cN/K against |kernel| at N/K, plus diagonal and symmetry identities."""

    check_id = "conductor"
    name = "Conductor Lowering"
    description = "Decay of the conductor-lowering kernel away from the diagonal"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": ["N", "K"],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        settings = context.settings
        N = int(params.get("N") or 10_000)
        K = float(params.get("K") or 100.0)
        c = settings.conductor_separation
        V = make_bump(1.0, 2.0, normalized=True)

        unit = N / K
        rows = conductor_localization(N, K, V, [unit, c * unit, 4.0 * c * unit])
        reference, middle, far = rows

        result = CheckResult()
        result.record("conductor_decay", far["envelope"] / reference["kernel_abs"], settings.decay_ratio)
        result.record("kernel_diagonal", abs(conductor_kernel(N, N, K, V) - 1.0), settings.tol_conductor_diagonal)

        n, m = N + int(round(unit)), N
        forward = conductor_kernel(n, m, K, V)
        result.record("kernel_conjugate", abs(conductor_kernel(m, n, K, V) - forward.conjugate()), settings.tol_conjugate)
        result.record("kernel_scaling", abs(conductor_kernel(2 * n, 2 * m, K, V) - forward), settings.tol_conjugate)

        result.tables["localization"] = pd.DataFrame(rows, columns=LOCALIZATION_COLUMNS)
        result.results = {
            "N": N,
            "K": K,
            "separation_unit": unit,
            "conductor_separation": c,
            "envelope_at_c_unit": middle["envelope"],
        }
        return result
