"""
Critical-Line Service

L(1/2 + it, f) for the weight-12 form with lambda-normalized coefficients,
so the completed function is

    Lambda(s) = (2 pi)^(-s) Gamma(s + 11/2) L(s) = Lambda(1 - s).

Two independent evaluations: a smoothed approximate functional equation
with Mellin weight G(w) = exp(A w^2), and a high-precision oracle from the
incomplete-gamma split of the theta integral at y = 1 (mpmath). Also the
dyadic sums S(N) and the convexity-ratio sweep.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import mpmath
import numpy as np
import pandas as pd
from scipy import special

from services.config import get_settings
from services.errors import DomainError, ResourceLimitError
from services.forms_service import CuspForm
from services.parallel import parallel_map
from services.window_service import Window

TWO_PI = 2.0 * math.pi
HALF_WEIGHT_SHIFT = 5.5  # (k - 1)/2 for k = 12

CONTOUR_ABSCISSA = 2.0
CONTOUR_STEP = 0.1
CONTOUR_EXTENT = 40.0

SWEEP_COLUMNS = ["t", "re_L", "im_L", "abs_L", "convexity_ratio"]
DYADIC_COLUMNS = ["t", "N", "K", "abs_S", "s_ratio"]


# --- dyadic sums ---------------------------------------------------------------

def s_of_n(form: CuspForm, N: float, t: float, V: Window) -> complex:
    """
    S(N) = sum lambda(n) n^(-it) V(n/N) over the support of V(./N).

    Raises:
        ResourceLimitError: If the support reaches past the coefficient cache
    """
    lo, hi = V.support
    start = max(1, math.ceil(lo * N))
    stop = math.floor(hi * N)
    if stop > form.n_max:
        raise ResourceLimitError(f"S(N) needs n <= {stop}, have n_max = {form.n_max}")
    if stop < start:
        return 0j
    n = np.arange(start, stop + 1, dtype=float)
    terms = form.lambda_range(start, stop) * np.exp(-1j * t * np.log(n)) * V(n / N)
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))


def dyadic_range(t: float, epsilon: float) -> List[int]:
    """Dyadic N = 1, 2, 4, ... with N <= t^(1+eps)."""
    top = t ** (1.0 + epsilon)
    out, N = [], 1
    while N <= top:
        out.append(N)
        N *= 2
    return out


def k_rule(N: float) -> float:
    """Default conductor-lowering length K = N^(2/3)."""
    return N ** (2.0 / 3.0)


def dyadic_sup(form: CuspForm, t: float, V: Window, epsilon: Optional[float] = None) -> Dict[str, object]:
    """sup over dyadic N <= t^(1+eps) of |S(N)|/N^(1/2), with the per-N rows."""
    epsilon = get_settings().epsilon if epsilon is None else epsilon
    rows = []
    for N in dyadic_range(t, epsilon):
        value = abs(s_of_n(form, N, t, V))
        rows.append({"t": t, "N": N, "K": k_rule(N), "abs_S": value, "s_ratio": value / math.sqrt(N)})
    return {"sup": max(r["s_ratio"] for r in rows), "rows": rows}


def trivial_range_check(form: CuspForm, t: float, V: Window, epsilon: Optional[float] = None) -> float:
    """max over dyadic N <= t^(3/4) of |S(N)|/(N t^eps)."""
    epsilon = get_settings().epsilon if epsilon is None else epsilon
    ratios = [
        abs(s_of_n(form, N, t, V)) / (N * t ** epsilon)
        for N in dyadic_range(t ** 0.75, 0.0)
    ]
    return max(ratios)


# --- approximate functional equation ---------------------------------------

def afe_length(t: float, precision: Optional[float] = None, smoothing: Optional[float] = None) -> int:
    """
    Terms needed so that V_s(n) < precision beyond the cut:
    X exp(sqrt(4 A log(1/precision))), X = |s + 11/2|/(2 pi).
    """
    settings = get_settings()
    precision = settings.afe_precision if precision is None else precision
    smoothing = settings.afe_smoothing if smoothing is None else smoothing
    if not 0 < precision < 1:
        raise DomainError(f"precision must lie in (0, 1), got {precision}")
    analytic = abs(complex(0.5 + HALF_WEIGHT_SHIFT, t)) / TWO_PI
    return max(16, math.ceil(analytic * math.exp(math.sqrt(4.0 * smoothing * math.log(1.0 / precision)))))


def _log_gamma_factor(s: np.ndarray) -> np.ndarray:
    """log of (2 pi)^(-s) Gamma(s + 11/2)."""
    return -s * math.log(TWO_PI) + special.loggamma(s + HALF_WEIGHT_SHIFT)


def _cutoff_bracket(s: complex, smoothing: float):
    """Nodes w on Re w = c and weights G(w) gamma(s+w)/(gamma(s) w) h/(2 pi)."""
    u = np.arange(-CONTOUR_EXTENT, CONTOUR_EXTENT + CONTOUR_STEP / 2, CONTOUR_STEP)
    w = CONTOUR_ABSCISSA + 1j * u
    log_ratio = _log_gamma_factor(s + w) - _log_gamma_factor(np.array([s]))[0]
    weights = np.exp(smoothing * w * w + log_ratio) / w * CONTOUR_STEP / TWO_PI
    return w, weights


def smoothed_cutoff(s: complex, n: np.ndarray, smoothing: float) -> np.ndarray:
    """V_s(n) = (1/2 pi i) int n^(-w) G(w) gamma(s+w)/(gamma(s) w) dw, trapezoid on Re w = 2."""
    w, weights = _cutoff_bracket(s, smoothing)
    log_n = np.log(np.asarray(n, dtype=float))
    return np.exp(-np.outer(log_n, w)) @ weights


def l_value_afe(form: CuspForm, t: float, precision: Optional[float] = None) -> complex:
    """
    L(1/2 + it) by the smoothed approximate functional equation

        L(s) = sum lambda(n) n^(-s) V_s(n) + (gamma(1-s)/gamma(s)) sum lambda(n) n^(s-1) V_(1-s)(n).

    Raises:
        ResourceLimitError: If the coefficient cache is shorter than the needed length
    """
    settings = get_settings()
    smoothing = settings.afe_smoothing
    length = afe_length(t, precision, smoothing)
    if length > settings.max_coefficients:
        raise ResourceLimitError(f"precision unattainable: AFE length {length} exceeds coefficient budget")
    if length > form.n_max:
        raise ResourceLimitError(f"AFE needs {length} coefficients, have n_max = {form.n_max}")

    s = complex(0.5, t)
    n = np.arange(1, length + 1, dtype=float)
    lam = form.lambda_range(1, length)
    log_n = np.log(n)

    first = lam * np.exp(-s * log_n) * smoothed_cutoff(s, n, smoothing)
    second = lam * np.exp((s - 1.0) * log_n) * smoothed_cutoff(1.0 - s, n, smoothing)
    root_factor = np.exp(_log_gamma_factor(np.array([1.0 - s]))[0] - _log_gamma_factor(np.array([s]))[0])
    total = first + root_factor * second
    return complex(math.fsum(total.real.tolist()), math.fsum(total.imag.tolist()))


# --- oracle --------------------------------------------------------------------

def oracle_digits(t: float) -> int:
    return int(math.ceil(0.68 * abs(t) + 30))


def l_value_oracle(form: CuspForm, t: float, length_factor: float = 2.0) -> complex:
    """
    L(1/2 + it) = L_tau(6 + it) from Lambda_tau(s) = sum tau(n) [(2 pi n)^(-s) Gamma(s, 2 pi n)
    + (2 pi n)^(s-12) Gamma(12 - s, 2 pi n)] and L_tau = (2 pi)^s Lambda_tau / Gamma(s),
    evaluated with exact tau(n) at about 0.68 |t| + 30 digits.
    """
    if form.weight != 12:
        raise DomainError("the oracle is written for weight 12")
    digits = oracle_digits(t)
    terms = int(math.ceil(length_factor * (0.37 * digits + 4)))
    if terms > form.n_max:
        raise ResourceLimitError(f"oracle needs {terms} coefficients, have n_max = {form.n_max}")
    with mpmath.workdps(digits):
        s = mpmath.mpc(6, t)
        two_pi = 2 * mpmath.pi
        total = mpmath.mpf(0)
        for n in range(1, terms + 1):
            x = two_pi * n
            total += form.tau(n) * (
                x ** (-s) * mpmath.gammainc(s, x) + x ** (s - 12) * mpmath.gammainc(12 - s, x)
            )
        value = two_pi ** s * total / mpmath.gamma(s)
        return complex(value)


# --- sweep -----------------------------------------------------------------------

@dataclass
class SweepPlan:
    """Grid of critical-line evaluation points with the dyadic N ranges per t."""
    t_grid: List[float]
    epsilon: float
    V: Window = field(repr=False)

    def __post_init__(self):
        if not self.t_grid:
            raise DomainError("sweep needs at least one t")
        for t in self.t_grid:
            if t <= 2:
                raise DomainError(f"sweep points need t > 2, got {t}")
            for N in dyadic_range(t, self.epsilon):
                K = k_rule(N)
                if not (math.sqrt(N) - 1e-12 <= K <= N ** (1.0 - self.epsilon) + 1e-12) or K >= t:
                    raise DomainError(f"K = {K} outside the admissible range for N = {N}, t = {t}")

    @classmethod
    def linear(cls, t_min: float, t_max: float, points: int, epsilon: float, V: Window) -> "SweepPlan":
        return cls(t_grid=[float(t) for t in np.linspace(t_min, t_max, points)], epsilon=epsilon, V=V)

    def to_dict(self) -> dict:
        return {"t_grid": list(self.t_grid), "epsilon": self.epsilon, "V": self.V.to_dict()}


@dataclass
class SweepResult:
    table: pd.DataFrame
    dyadic: pd.DataFrame
    exponent: float
    max_convexity_ratio: float
    sup_observations: List[Dict[str, float]]


def _sweep_point(form: CuspForm, plan: SweepPlan, t: float):
    value = l_value_afe(form, t)
    sup = dyadic_sup(form, t, plan.V, plan.epsilon)
    row = {
        "t": t,
        "re_L": value.real,
        "im_L": value.imag,
        "abs_L": abs(value),
        "convexity_ratio": abs(value) / math.sqrt(t),
    }
    observation = {
        "t": t,
        "sup_s_ratio": sup["sup"],
        "l_over_t_eps": abs(value) * t ** (-plan.epsilon),
    }
    return row, sup["rows"], observation


def convexity_sweep(form: CuspForm, plan: SweepPlan, threads: int = 1) -> SweepResult:
    """
    |L(1/2+it)|, |L|/t^(1/2) and sup_N |S(N)|/N^(1/2) over the plan, with the
    fitted exponent of |L| against t (recorded, never asserted).
    """
    results = parallel_map(lambda t: _sweep_point(form, plan, t), plan.t_grid, threads)
    table = pd.DataFrame([r[0] for r in results], columns=SWEEP_COLUMNS)
    dyadic = pd.DataFrame([row for r in results for row in r[1]], columns=DYADIC_COLUMNS)
    magnitudes = np.maximum(table["abs_L"].to_numpy(), 1e-300)
    exponent, _ = np.polyfit(np.log(table["t"].to_numpy()), np.log(magnitudes), 1)
    return SweepResult(
        table=table,
        dyadic=dyadic,
        exponent=float(exponent),
        max_convexity_ratio=float(table["convexity_ratio"].max()),
        sup_observations=[r[2] for r in results],
    )


def emit_plot_script(csv_path: Path) -> Path:
    """Write a gnuplot script next to the sweep CSV plotting |L|/t^(1/2) against t."""
    csv_path = Path(csv_path)
    script = csv_path.with_suffix(".gp")
    script.write_text(
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 't'\n"
        "set ylabel '|L(1/2+it)| / t^{1/2}'\n"
        "set terminal pngcairo size 900,500\n"
        f"set output '{csv_path.with_suffix('.png').name}'\n"
        f"plot '{csv_path.name}' using 1:5 with linespoints title 'convexity ratio'\n",
        encoding="utf-8",
    )
    return script
