"""
Voronoi Service

GL(2) Voronoi summation for a level-1 cusp form:

    sum lambda(n) e(na/q) F(n)
        = (1/q) sum lambda(n) e(-n a_bar/q) int F(x) 2 pi i^k J_{k-1}(4 pi sqrt(nx)/q) dx

together with the Bessel kernel J_nu, the gamma-factor ratio gamma(s) and
its Stirling residue Phi(tau).
"""

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import special

from services.config import get_settings
from services.delta_service import mod_inverse
from services.errors import ConvergenceError, DomainError, ResourceLimitError
from services.forms_service import CuspForm, divisor_counts
from services.parallel import parallel_map
from services.quadrature_service import oscillatory_quadrature, panel_nodes
from services.series import jet_derivatives, jet_mul, power_jet
from services.window_service import Window

TWO_PI = 2.0 * math.pi

# Frozen switch points between the ascending series and the Hankel expansion
SWITCH_POINTS: Dict[int, float] = {11: 15.0}
MAX_SERIES_TERMS = 300
MAX_HANKEL_TERMS = 60
POLE_DISTANCE = 1e-8

TAIL_ORDER = 24
TAIL_PANELS = 64
TAIL_EXTENT = 8
TAIL_CHUNK = 1 << 16
BLOCK_SIZE = 128
# up to four oscillations per 24-node panel keeps the rule error below 1e-20
DUAL_PANEL_WIDTH = 4.0
FIRST_CUT = 64
MAX_CUT = 1 << 20


# --- Bessel kernel -----------------------------------------------------------

def bessel_series(order: int, x: np.ndarray) -> np.ndarray:
    """Ascending series sum (-1)^k (x/2)^(2k+nu) / (k! (k+nu)!)."""
    x = np.asarray(x, dtype=float)
    half = x / 2.0
    term = half ** order / math.factorial(order)
    total = term.copy()
    square = -half * half
    for k in range(1, MAX_SERIES_TERMS):
        term = term * square / (k * (k + order))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)) and k > np.max(half):
            break
    return total


def bessel_hankel(order: int, x: np.ndarray) -> np.ndarray:
    """
    Large-argument expansion sqrt(2/(pi x)) (P cos w - Q sin w), w = x - nu pi/2 - pi/4,
    summed per point until the divergent tail starts or the terms fall below rounding.
    """
    x = np.asarray(x, dtype=float)
    mu = 4.0 * order * order
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, MAX_HANKEL_TERMS):
        nxt = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        # past (2k-1)^2 > mu the expansion diverges once terms start growing
        diverging = (np.abs(nxt) >= np.abs(term)) & ((2 * k - 1) ** 2 > mu)
        active &= ~diverging & (np.abs(term) > 1e-17)
        if not np.any(active):
            break
        # P takes a_0, -a_2, +a_4, ...; Q takes a_1, -a_3, +a_5, ...
        sign = -1.0 if (k // 2) % 2 else 1.0
        contribution = np.where(active, sign * nxt, 0.0)
        if k % 2:
            q = q + contribution
        else:
            p = p + contribution
        term = np.where(active, nxt, term)
    w = x - order * math.pi / 2.0 - math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(w) - q * np.sin(w))


@lru_cache(maxsize=8)
def scan_switch_point(order: int, agreement: float = 1e-9, run: int = 8) -> float:
    """
    Smallest x (step 1/4) from which series and Hankel branches agree to
    `agreement` relative to the envelope sqrt(2/(pi x)) on `run` consecutive points.
    """
    grid = np.arange(max(1.0, order / 2.0), 20.0 * (order + 1), 0.25)
    envelope = np.sqrt(2.0 / (math.pi * grid))
    diff = np.abs(bessel_series(order, grid) - bessel_hankel(order, grid)) / envelope
    good = diff <= agreement
    for i in range(grid.size - run):
        if np.all(good[i:i + run]):
            return float(grid[i])
    raise ConvergenceError(f"no switch point found for order {order}")


def switch_point(order: int) -> float:
    if order in SWITCH_POINTS:
        return SWITCH_POINTS[order]
    return scan_switch_point(order)


def bessel_j(order: int, x):
    """
    J_order(x) for x > 0: ascending series below the switch point, Hankel expansion above.

    Raises:
        DomainError: If order < 0 or any x <= 0
    """
    if order < 0:
        raise DomainError(f"Bessel order must be nonnegative, got {order}")
    values = np.asarray(x, dtype=float)
    if np.any(values <= 0):
        raise DomainError("Bessel argument must be positive")
    flat = np.atleast_1d(values).ravel()
    out = np.empty_like(flat)
    cut = switch_point(order)
    low = flat <= cut
    if np.any(low):
        out[low] = bessel_series(order, flat[low])
    if np.any(~low):
        out[~low] = bessel_hankel(order, flat[~low])
    if values.ndim == 0:
        return float(out[0])
    return out.reshape(values.shape)


# --- gamma factor ------------------------------------------------------------

def gamma_ratio(s: complex, k: int) -> complex:
    """
    gamma(s) = Gamma(s/2 + (k-1)/2) / Gamma(1 - s/2 + (k-1)/2).

    Raises:
        DomainError: Within 1e-8 of a numerator pole s = 1 - k - 2j
    """
    s = complex(s)
    j = round((1 - k - s.real) / 2.0)
    if j >= 0 and abs(s - (1 - k - 2 * j)) < POLE_DISTANCE:
        raise DomainError(f"s = {s} is within {POLE_DISTANCE} of a pole of gamma(s)")
    shift = (k - 1) / 2.0
    return complex(np.exp(special.loggamma(s / 2.0 + shift) - special.loggamma(1.0 - s / 2.0 + shift)))


def phi(tau: float, k: int = 12) -> complex:
    """Phi(tau) = (2 pi)^(-i tau) gamma(1 + i tau) (|tau|/(4 e pi))^(-i tau)."""
    if tau == 0:
        raise DomainError("Phi is defined for tau != 0")
    log_modulus = math.log(abs(tau) / (4.0 * math.e * math.pi))
    return (
        cmath.exp(-1j * tau * math.log(TWO_PI))
        * gamma_ratio(1.0 + 1j * tau, k)
        * cmath.exp(-1j * tau * log_modulus)
    )


def phi_derivative(tau: float, k: int = 12, step: float = 1e-4) -> complex:
    """Central difference of Phi."""
    return (phi(tau + step, k) - phi(tau - step, k)) / (2.0 * step)


# --- Voronoi sides -------------------------------------------------------------

@dataclass
class DualSum:
    value: complex
    tail_estimate: float
    quadrature_error: float
    n_cut: int

    def to_dict(self) -> dict:
        return {
            "re": self.value.real,
            "im": self.value.imag,
            "tail_estimate": self.tail_estimate,
            "quadrature_error": self.quadrature_error,
            "n_cut": self.n_cut,
        }


@dataclass
class VoronoiReport:
    q: int
    a: int
    support: Tuple[float, float]
    lhs: complex
    rhs: complex
    absolute_residual: float
    relative_residual: float
    n_cut: int
    budget: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "a": self.a,
            "support": list(self.support),
            "lhs_re": self.lhs.real,
            "lhs_im": self.lhs.imag,
            "rhs_re": self.rhs.real,
            "rhs_im": self.rhs.imag,
            "absolute_residual": self.absolute_residual,
            "relative_residual": self.relative_residual,
            "n_cut": self.n_cut,
            "budget": dict(self.budget),
        }


def _check_test_function(F: Window, form: CuspForm) -> Tuple[float, float]:
    a, b = F.support
    if a <= 0:
        raise DomainError(f"test function must be supported in (0, inf), got {F.support}")
    if b > form.n_max:
        raise ResourceLimitError(f"support {F.support} exceeds coefficient cache n_max = {form.n_max}")
    return a, b


def voronoi_lhs(form: CuspForm, a: int, q: int, F: Window) -> complex:
    """sum lambda(n) e(na/q) F(n) over the support of F."""
    if math.gcd(a, q) != 1:
        raise DomainError(f"gcd({a}, {q}) != 1")
    lo, hi = _check_test_function(F, form)
    n = np.arange(max(1, math.ceil(lo)), math.floor(hi) + 1)
    if n.size == 0:
        return 0j
    terms = form.lambda_range(int(n[0]), int(n[-1])) * F(n.astype(float)) * np.exp(1j * TWO_PI * np.mod(n * a, q) / q)
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))


def _dual_block(F: Window, q: int, order: int, n_values: np.ndarray):
    lo, hi = F.support
    c = 4.0 * math.pi * np.sqrt(n_values.astype(float))[:, None] / q

    def integrand(x: np.ndarray) -> np.ndarray:
        return F(x)[None, :] * bessel_j(order, c * np.sqrt(x)[None, :])

    def frequency(x: np.ndarray) -> np.ndarray:
        return np.sqrt(n_values[-1] / x) / q

    result = oscillatory_quadrature(integrand, lo, hi, frequency=frequency, width=DUAL_PANEL_WIDTH)
    return np.real(result.value), result.error_estimate


def dual_integrals(F: Window, q: int, n_cut: int, k: int = 12, threads: int = 1) -> Tuple[np.ndarray, float]:
    """
    int F(x) 2 pi i^k J_{k-1}(4 pi sqrt(nx)/q) dx for n = 1..n_cut.

    Returns:
        (integrals, summed quadrature error estimate)
    """
    n_all = np.arange(1, n_cut + 1)
    blocks = [n_all[i:i + BLOCK_SIZE] for i in range(0, n_cut, BLOCK_SIZE)]
    parts = parallel_map(lambda block: _dual_block(F, q, k - 1, block), blocks, threads)
    integrals = np.concatenate([p[0] for p in parts]) * TWO_PI * (1j ** k)
    error = TWO_PI * math.fsum(p[1] * len(b) for p, b in zip(parts, blocks))
    return integrals, error


def _tail_derivative_norms(F: Window) -> np.ndarray:
    """L1 norms of h^(j), j <= TAIL_ORDER, for h(y) = 2 sqrt(y) F(y^2)."""
    lo, hi = F.support
    breaks = np.linspace(math.sqrt(lo), math.sqrt(hi), TAIL_PANELS + 1)
    y, w = panel_nodes(breaks, get_settings().panel_order)
    outer = F.taylor(y * y, TAIL_ORDER)
    # y^2 about y0: x0 + 2 y0 d + d^2
    shift = np.zeros((TAIL_ORDER + 1, y.size))
    shift[1] = 2.0 * y
    shift[2] = 1.0
    composed = np.zeros_like(shift)
    composed[0] = outer[TAIL_ORDER]
    for k in range(TAIL_ORDER - 1, -1, -1):
        composed = jet_mul(composed, shift)
        composed[0] += outer[k]
    h = jet_mul(2.0 * power_jet(y, 0.5, TAIL_ORDER), composed)
    return np.abs(jet_derivatives(h)) @ w


def tail_estimate(F: Window, q: int, n_cut: int, k: int = 12) -> float:
    """
    Bound on the dual-sum terms n > n_cut:

        (2 pi/q) sum d(n) (1 + nu^2/z_min) sqrt(2/(pi c_n)) min_j ||h^(j)||_1 / c_n^j,

    c_n = 4 pi sqrt(n)/q, summed exactly up to TAIL_EXTENT * n_cut and by an
    integral majorant (with d(n) <= 2 sqrt(n)) beyond.
    """
    nu = k - 1
    lo, _ = F.support
    norms = _tail_derivative_norms(F)
    j = np.arange(TAIL_ORDER + 1)[:, None]
    z_min = 4.0 * math.pi * math.sqrt((n_cut + 1) * lo) / q
    bessel_factor = 1.0 + nu * nu / z_min

    limit = TAIL_EXTENT * n_cut
    counts = divisor_counts(limit)
    pieces = []
    for start in range(n_cut + 1, limit + 1, TAIL_CHUNK):
        n = np.arange(start, min(start + TAIL_CHUNK, limit + 1), dtype=float)
        c = 4.0 * math.pi * np.sqrt(n) / q
        with np.errstate(under="ignore"):
            ibp = np.min(norms[:, None] / c[None, :] ** j, axis=0)
        d = counts[start - 1:start - 1 + n.size].astype(float)
        pieces.append(d * np.sqrt(2.0 / (math.pi * c)) * ibp)
    direct = math.fsum(np.concatenate(pieces).tolist())

    # beyond the sieve: 2 sqrt(n) sqrt(2/(pi c_n)) ||h^(J)|| (q/(4 pi))^J n^(-J/2)
    order = TAIL_ORDER
    scale = (q / (4.0 * math.pi)) ** order * norms[order]
    amplitude = 2.0 * math.sqrt(2.0 * q / (4.0 * math.pi * math.pi))
    exponent = 0.5 - 0.25 - order / 2.0
    remainder = amplitude * scale * limit ** (exponent + 1.0) / -(exponent + 1.0)
    return (TWO_PI / q) * bessel_factor * (direct + remainder)


def choose_n_cut(form: CuspForm, q: int, F: Window, budget: Optional[float] = None, k: int = 12) -> int:
    """
    Smallest dyadic n_cut whose tail estimate is below budget.

    Raises:
        ConvergenceError: If no n_cut up to the cap reaches the budget
        ResourceLimitError: If the required n_cut exceeds the coefficient cache
    """
    budget = get_settings().tail_budget if budget is None else budget
    n_cut = FIRST_CUT
    while n_cut <= MAX_CUT:
        if tail_estimate(F, q, n_cut, k) <= budget:
            if n_cut > form.n_max:
                raise ResourceLimitError(f"n_cut = {n_cut} exceeds coefficient cache n_max = {form.n_max}")
            return n_cut
        n_cut *= 2
    raise ConvergenceError(f"tail estimate stays above {budget:.1e} up to n_cut = {MAX_CUT}")


def voronoi_rhs(
    form: CuspForm,
    a: int,
    q: int,
    F: Window,
    n_cut: int,
    integrals: Optional[np.ndarray] = None,
    threads: int = 1,
) -> DualSum:
    """
    Truncated dual sum (1/q) sum_{n <= n_cut} lambda(n) e(-n a_bar/q) int F(x) 2 pi i^k J_{k-1}(...) dx.

    Args:
        integrals: Precomputed dual integrals for this (F, q), reused across a

    Raises:
        ResourceLimitError: If n_cut exceeds the coefficient cache
    """
    if math.gcd(a, q) != 1:
        raise DomainError(f"gcd({a}, {q}) != 1")
    _check_test_function(F, form)
    if n_cut > form.n_max:
        raise ResourceLimitError(f"n_cut = {n_cut} exceeds coefficient cache n_max = {form.n_max}")
    quadrature_error = 0.0
    if integrals is None:
        integrals, quadrature_error = dual_integrals(F, q, n_cut, form.weight, threads)
    integrals = integrals[:n_cut]
    a_bar = mod_inverse(a, q)
    n = np.arange(1, n_cut + 1)
    twist = np.exp(-1j * TWO_PI * np.mod(n * a_bar, q) / q)
    terms = form.lambda_range(1, n_cut) * twist * integrals / q
    value = complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))
    return DualSum(
        value=value,
        tail_estimate=tail_estimate(F, q, n_cut, form.weight),
        quadrature_error=quadrature_error * float(np.max(np.abs(form.lambda_range(1, n_cut)))) / q,
        n_cut=n_cut,
    )


def voronoi_check(
    form: CuspForm,
    a: int,
    q: int,
    F: Window,
    budget: Optional[float] = None,
    threads: int = 1,
    integrals: Optional[np.ndarray] = None,
) -> VoronoiReport:
    """Both sides of the summation formula and the residual with its error budget."""
    n_cut = choose_n_cut(form, q, F, budget, form.weight)
    lhs = voronoi_lhs(form, a, q, F)
    rhs = voronoi_rhs(form, a, q, F, n_cut, integrals=integrals, threads=threads)
    residual = abs(lhs - rhs.value)
    return VoronoiReport(
        q=q,
        a=a,
        support=F.support,
        lhs=lhs,
        rhs=rhs.value,
        absolute_residual=residual,
        relative_residual=residual / max(abs(lhs), 1e-300),
        n_cut=n_cut,
        budget={"quadrature": rhs.quadrature_error, "truncation": rhs.tail_estimate},
    )
