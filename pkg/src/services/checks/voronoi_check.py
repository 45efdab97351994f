"""
Voronoi Check - GL(2) Summation Formula

Both sides of the twisted Voronoi formula for bumps at several scales,
with the dual integrals shared across the residues a mod q, plus the
unitarity of the gamma-factor ratio on the 1-line and the decay of Phi'.
"""

import math
from typing import List, Tuple

import numpy as np
import pandas as pd

from .base import BaseCheck, CheckResult, RunContext
from services.voronoi_service import choose_n_cut, dual_integrals, gamma_ratio, phi_derivative, voronoi_check
from services.window_service import make_bump

DEFAULT_MODULI = (1, 2, 3)
DEFAULT_SCALES = (10, 50)
REFLECTION_TAUS = np.linspace(2.0, 500.0, 64)
PHI_TAUS = np.geomspace(10.0, 1_000.0, 16)

VORONOI_COLUMNS = [
    "q", "a", "scale", "lhs_re", "lhs_im", "rhs_re", "rhs_im",
    "relative_residual", "n_cut", "tail_estimate", "quadrature_error",
]


def _cases(params) -> List[Tuple[int, List[int], int]]:
    if params.get("q") is None and params.get("scale") is None:
        return [
            (q, [a for a in range(1, q + 1) if math.gcd(a, q) == 1], scale)
            for scale in DEFAULT_SCALES
            for q in DEFAULT_MODULI
        ]
    q = int(params.get("q") or 1)
    a = int(params.get("a") or 1)
    scale = int(params.get("scale") or DEFAULT_SCALES[0])
    return [(q, [a], scale)]


class VoronoiCheck(BaseCheck):
    """Relative residual of lhs against the truncated dual sum for bumps on [X, 2X]."""

    check_id = "voronoi"
    name = "Voronoi Summation"
    description = "Twisted Voronoi formula for the level-1 weight-12 form"
    version = "1.0.0"
    enabled = True

    input_schema = {
        "required": [],
        "optional": ["q", "a", "scale"],
    }

    def execute(self, context: RunContext, **params) -> CheckResult:
        settings = context.settings
        form = context.form()
        result = CheckResult()
        rows = []

        for q, residues, scale in _cases(params):
            F = make_bump(float(scale), 2.0 * scale)
            n_cut = choose_n_cut(form, q, F, settings.tail_budget, form.weight)
            integrals, quadrature_error = dual_integrals(F, q, n_cut, form.weight, context.threads)
            for a in residues:
                report = voronoi_check(form, a, q, F, settings.tail_budget, context.threads, integrals)
                quadrature = quadrature_error * float(np.max(np.abs(form.lambda_range(1, n_cut)))) / q
                tail = report.budget["truncation"]
                label = f"q{q}_a{a}_scale{scale}"
                result.record(f"voronoi_{label}", report.relative_residual, settings.tol_voronoi)
                result.record(f"tail_{label}", tail, settings.tail_budget)
                rows.append({
                    "q": q, "a": a, "scale": scale,
                    "lhs_re": report.lhs.real, "lhs_im": report.lhs.imag,
                    "rhs_re": report.rhs.real, "rhs_im": report.rhs.imag,
                    "relative_residual": report.relative_residual,
                    "n_cut": report.n_cut,
                    "tail_estimate": tail,
                    "quadrature_error": quadrature,
                })

        reflection = max(
            abs(abs(gamma_ratio(1.0 + 1j * tau, form.weight) * gamma_ratio(1.0 - 1j * tau, form.weight)) - 1.0)
            for tau in REFLECTION_TAUS
        )
        result.record("gamma_reflection", reflection, settings.tol_gamma_reflection)
        scaled = [abs(tau * phi_derivative(float(tau), form.weight)) for tau in PHI_TAUS]
        phi_constant = context.fit(
            "phi_derivative_constant", lambda: scaled[0], {"weight": form.weight, "tau": float(PHI_TAUS[0])}
        )
        for tau, value in zip(PHI_TAUS, scaled):
            result.record(f"phi_derivative_tau{tau:.4g}", value, phi_constant)

        result.tables["residuals"] = pd.DataFrame(rows, columns=VORONOI_COLUMNS)
        result.results = {
            "cases": len(rows),
            "phi_derivative_sup": float(np.max(scaled)),
            "phi_derivative_constant": phi_constant,
        }
        return result
