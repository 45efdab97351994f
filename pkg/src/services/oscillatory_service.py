"""
Oscillatory Integral Service

Oracle quadrature for integrals of the form int g(x) e(f(x)) dx, the
two stationary-phase estimates (no critical point / one critical point),
the transform W^dagger(r, s) = int W(x) e(-rx) x^(s-1) dx with its leading
term, the conductor-lowering kernel, and the two-dimensional
second-derivative bound.

e(z) = exp(2 pi i z) throughout.
"""

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from services.config import get_settings
from services.errors import ConvergenceError, DomainError, ResourceLimitError
from services.quadrature_service import (
    MAX_REFINEMENTS,
    oscillatory_quadrature,
    panel_breaks,
    panel_nodes,
)
from services.window_service import Window

DerivativeRows = Callable[[np.ndarray, int], np.ndarray]

TWO_PI = 2.0 * math.pi
ENVELOPE_SAMPLES = 8
SAMPLE_POINTS = 2001
GRID_WIDTH = 4.0


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    """
    An integral int g e(f) with its derivative scales.

    phase(x, order) and amplitude(x, order) return rows of derivatives
    (value, first, ..., order-th) evaluated at x.
    """
    phase: DerivativeRows
    amplitude: DerivativeRows
    support: Tuple[float, float]
    theta_f: float
    omega_f: float
    omega_g: float
    lambda_: Optional[float] = None
    kappa: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "support": list(self.support),
            "theta_f": self.theta_f,
            "omega_f": self.omega_f,
            "omega_g": self.omega_g,
            "lambda": self.lambda_,
            "kappa": self.kappa,
        }


@dataclass(frozen=True, eq=False)
class TwoDPhaseProfile:
    """
    phase(x, y) -> (f, f_x, f_y, f_xx, f_yy, f_xy); amplitude(x, y) -> (g, g_xy).
    support is (a, b, c, d) for the rectangle (a, b) x (c, d).
    """
    phase: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, ...]]
    amplitude: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
    support: Tuple[float, float, float, float]
    r1: float
    r2: float


@dataclass
class StationaryExpansion:
    main: complex
    error_bound: float
    stationary_point: Optional[float]

    def to_dict(self) -> dict:
        return {
            "main_re": self.main.real,
            "main_im": self.main.imag,
            "error_bound": self.error_bound,
            "stationary_point": self.stationary_point,
        }


# --- profiles --------------------------------------------------------------

def window_amplitude(window: Window) -> DerivativeRows:
    return lambda x, order: window.derivatives(x, order)


def polynomial_phase(coefficients: Sequence[float]) -> DerivativeRows:
    """Phase f(x) = sum c_k x^k given by its coefficients, constant first."""
    poly = np.polynomial.Polynomial(coefficients)

    def rows(x: np.ndarray, order: int) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([poly.deriv(j)(x) if j else poly(x) for j in range(order + 1)])

    return rows


def fresnel_profile(scale: float, window: Window) -> PhaseProfile:
    """f(x) = B x^2 against a window straddling 0: Theta_f = B, Omega_f = Omega_g = 1."""
    a, b = window.support
    if not a < 0.0 < b:
        raise DomainError(f"window support {window.support} must contain the stationary point 0")
    return PhaseProfile(
        phase=polynomial_phase([0.0, 0.0, scale]),
        amplitude=window_amplitude(window),
        support=window.support,
        theta_f=float(scale),
        omega_f=1.0,
        omega_g=1.0,
        kappa=min(b, -a),
    )


def linear_profile(slope: float, window: Window) -> PhaseProfile:
    """f(x) = B x: no stationary point, Lambda = |B|."""
    return PhaseProfile(
        phase=polynomial_phase([0.0, slope]),
        amplitude=window_amplitude(window),
        support=window.support,
        theta_f=abs(float(slope)),
        omega_f=1.0,
        omega_g=1.0,
        lambda_=abs(float(slope)),
    )


def profile_constants(profile: PhaseProfile) -> Dict[str, float]:
    """
    Sampled constants behind the derivative-scale assumptions.

    C_f = max_{i=2,3,4} max |f^(i)| Omega_f^i / Theta_f,
    C_g = max_{j=0,1,2} max |g^(j)| Omega_g^j, and the larger of |g(a)|, |g(b)|.
    """
    a, b = profile.support
    x = np.linspace(a, b, SAMPLE_POINTS)
    f = profile.phase(x, 4)
    g = profile.amplitude(x, 2)
    c_f = max(
        float(np.max(np.abs(f[i]))) * profile.omega_f ** i / profile.theta_f for i in (2, 3, 4)
    )
    c_g = max(float(np.max(np.abs(g[j]))) * profile.omega_g ** j for j in (0, 1, 2))
    return {
        "c_phase": c_f,
        "c_amplitude": c_g,
        "endpoint_amplitude": float(max(abs(g[0][0]), abs(g[0][-1]))),
    }


# --- oracle and the two branches -------------------------------------------

def oracle_quadrature(profile: PhaseProfile, tol: Optional[float] = None) -> complex:
    """int_a^b g(x) e(f(x)) dx by phase-resolving panel quadrature."""
    a, b = profile.support

    def integrand(x: np.ndarray) -> np.ndarray:
        f = profile.phase(x, 0)[0]
        g = profile.amplitude(x, 0)[0]
        return g * np.exp(1j * TWO_PI * f)

    def frequency(x: np.ndarray) -> np.ndarray:
        return profile.phase(x, 1)[1]

    return oscillatory_quadrature(integrand, a, b, frequency=frequency, tol=tol).value


def first_branch_bound(profile: PhaseProfile) -> float:
    """(Theta/(Omega^2 Lambda^3)) (1 + Omega/Omega_g + (Omega^2/Omega_g^2) Lambda/(Theta/Omega))."""
    if profile.lambda_ is None:
        raise DomainError("first-branch bound needs Lambda = min |f'|")
    theta, omega, omega_g, lam = profile.theta_f, profile.omega_f, profile.omega_g, profile.lambda_
    return (theta / (omega ** 2 * lam ** 3)) * (
        1.0 + omega / omega_g + (omega ** 2 / omega_g ** 2) * lam / (theta / omega)
    )


def stationary_point(profile: PhaseProfile) -> float:
    """Root of f' in (a, b) where f' goes from negative to positive."""
    a, b = profile.support

    def derivative(x: float) -> float:
        return float(profile.phase(np.array([x]), 1)[1][0])

    left, right = derivative(a), derivative(b)
    if not (left < 0.0 < right):
        raise DomainError(f"f' does not change sign from - to + on [{a}, {b}] ({left:.3e}, {right:.3e})")
    return float(optimize.brentq(derivative, a, b, xtol=1e-12, rtol=4 * np.finfo(float).eps))


def second_branch_expand(profile: PhaseProfile) -> StationaryExpansion:
    """
    Leading term g(x0) e(f(x0) + 1/8)/sqrt(f''(x0)) and its error bound.

    Raises:
        DomainError: If f' has no sign change or f'' < Theta/Omega^2 somewhere
    """
    a, b = profile.support
    theta, omega, omega_g = profile.theta_f, profile.omega_f, profile.omega_g
    x = np.linspace(a, b, SAMPLE_POINTS)
    curvature = profile.phase(x, 2)[2]
    floor = theta / omega ** 2
    if np.min(curvature) < floor * (1.0 - 1e-12):
        raise DomainError(f"f'' = {np.min(curvature):.3e} falls below Theta/Omega^2 = {floor:.3e}")

    x0 = stationary_point(profile)
    f = profile.phase(np.array([x0]), 2)
    g0 = float(profile.amplitude(np.array([x0]), 0)[0][0])
    main = g0 * cmath.exp(1j * TWO_PI * (float(f[0][0]) + 0.125)) / math.sqrt(float(f[2][0]))

    kappa = profile.kappa if profile.kappa is not None else min(b - x0, x0 - a)
    error_bound = (
        omega ** 4 / (theta ** 2 * kappa ** 3)
        + omega / theta ** 1.5
        + omega ** 3 / (theta ** 1.5 * omega_g ** 2)
    )
    return StationaryExpansion(main=main, error_bound=error_bound, stationary_point=x0)


def _grid_pass(window: Window, r: np.ndarray, s: np.ndarray, breaks: np.ndarray, order: int) -> np.ndarray:
    y, w = panel_nodes(breaks, order)
    left = np.exp((s[:, None] - 1.0) * np.log(y)[None, :]) * (window(y) * w)[None, :]
    right = np.exp(-1j * TWO_PI * np.outer(y, r))
    return left @ right


def w_dagger_grid(
    window: Window,
    rs: Sequence[float],
    ss: Sequence[complex],
    tol: Optional[float] = None,
    width: float = GRID_WIDTH,
    max_work: Optional[int] = None,
) -> np.ndarray:
    """
    W dagger on the full product grid: out[j, i] = W dagger(r_i, s_j).

    Both factors of the integrand separate in (r, s), so each pass is one
    matrix product over a shared mesh. Passes are repeated with halved
    panel width until two agree to tol relative to max(1, max |W dagger|).

    Raises:
        ResourceLimitError: If a pass would exceed max_work multiply-adds
        ConvergenceError: If no two passes agree within the refinement limit
    """
    settings = get_settings()
    tol = settings.quad_tol if tol is None else tol
    max_work = settings.nested_work_cap if max_work is None else max_work
    a, b = _check_positive_support(window)
    r = np.asarray(rs, dtype=float)
    s = np.asarray(ss, dtype=complex)
    r_lo, r_hi = float(r.min()), float(r.max())
    b_lo, b_hi = float(s.imag.min()), float(s.imag.max())

    def frequency(y: np.ndarray) -> np.ndarray:
        corners = [np.abs(-rr + bb / (TWO_PI * y)) for rr in (r_lo, r_hi) for bb in (b_lo, b_hi)]
        return np.max(corners, axis=0)

    order = settings.panel_order
    previous = None
    panels = 0
    for _ in range(MAX_REFINEMENTS + 1):
        breaks = panel_breaks(a, b, frequency, width, min_panels=max(8, 2 * panels))
        panels = breaks.size - 1
        work = panels * order * r.size * s.size
        if work > max_work:
            raise ResourceLimitError(f"nested transform needs {work:.2e} multiply-adds, budget {max_work:.2e}")
        current = _grid_pass(window, r, s, breaks, order)
        if previous is not None:
            change = float(np.max(np.abs(current - previous)))
            if change <= tol * max(1.0, float(np.max(np.abs(current)))):
                return current
        previous = current
        width /= 2.0
    raise ConvergenceError(f"transform grid did not settle to {tol:.1e}")


def error_slope(params: Sequence[float], errors: Sequence[float]) -> float:
    """Slope of log(error) against log(param) by least squares."""
    slope, _ = np.polyfit(np.log(np.asarray(params, dtype=float)), np.log(np.asarray(errors, dtype=float)), 1)
    return float(slope)


# --- W dagger ----------------------------------------------------------------

def _check_positive_support(window: Window) -> Tuple[float, float]:
    a, b = window.support
    if a <= 0.0:
        raise DomainError(f"W dagger needs support in (0, inf), got {window.support}")
    return a, b


def w_dagger_many(window: Window, rs: Sequence[float], ss: Sequence[complex], tol: Optional[float] = None) -> np.ndarray:
    """W dagger(r_i, s_i) for a batch of parameters on one shared mesh."""
    a, b = _check_positive_support(window)
    r = np.asarray(rs, dtype=float)[:, None]
    s = np.asarray(ss, dtype=complex)[:, None]
    beta = s.imag

    def integrand(x: np.ndarray) -> np.ndarray:
        log_x = np.log(x)[None, :]
        return window(x)[None, :] * np.exp((s - 1.0) * log_x - 1j * TWO_PI * r * x[None, :])

    def frequency(x: np.ndarray) -> np.ndarray:
        return np.abs(-r + beta / (TWO_PI * x[None, :]))

    return oscillatory_quadrature(integrand, a, b, frequency=frequency, tol=tol).value


def w_dagger(window: Window, r: float, s: complex, tol: Optional[float] = None) -> complex:
    """int_0^inf W(x) e(-rx) x^(s-1) dx by oracle quadrature."""
    return complex(w_dagger_many(window, [r], [s], tol)[0])


def w_dagger_main(window: Window, r: float, s: complex) -> StationaryExpansion:
    """
    Stationary-phase leading term of W dagger(r, s).

    main = sqrt(2 pi) e(1/8)/sqrt(-beta) W(x0) x0^sigma (x0/e)^(i beta), x0 = beta/(2 pi r),
    principal square root, so the phase factor is exp(-i pi/4 sgn beta).
    error_bound = min(|beta|^(-3/2), |r|^(-3/2)).

    Raises:
        DomainError: If r = 0
    """
    if r == 0:
        raise DomainError("stationary point beta/(2 pi r) undefined at r = 0")
    sigma, beta = float(s.real), float(s.imag)
    a, b = window.support
    bound_beta = abs(beta) ** -1.5 if beta != 0 else math.inf
    error_bound = min(bound_beta, abs(r) ** -1.5)
    x0 = beta / (TWO_PI * r)
    if beta == 0 or not (a < x0 < b):
        return StationaryExpansion(main=0j, error_bound=error_bound, stationary_point=None)
    main = (
        math.sqrt(TWO_PI) * cmath.exp(1j * TWO_PI / 8.0) / cmath.sqrt(complex(-beta, 0.0))
        * window(x0) * x0 ** sigma * cmath.exp(1j * beta * math.log(x0 / math.e))
    )
    return StationaryExpansion(main=main, error_bound=error_bound, stationary_point=x0)


def decay_envelope(window: Window, r: float, s: complex, tol: Optional[float] = None) -> float:
    """
    max |W dagger| over a band of one oscillation period starting at r.

    The transform of a compact bump has isolated zeros, so decay is read
    off the band maximum rather than a single frequency.
    """
    a, b = window.support
    step = 1.0 / ((b - a) * ENVELOPE_SAMPLES)
    direction = 1.0 if r >= 0 else -1.0
    rs = r + direction * step * np.arange(ENVELOPE_SAMPLES)
    values = w_dagger_many(window, rs, [s] * ENVELOPE_SAMPLES, tol)
    return float(np.max(np.abs(values)))


# --- conductor-lowering kernel ----------------------------------------------

def kernel_frequency(n: int, m: int, K: float) -> float:
    return -K * math.log(n / m) / TWO_PI


def conductor_kernel(n: int, m: int, K: float, V: Window, tol: Optional[float] = None) -> complex:
    """
    (1/K) int (n/m)^(iv) V(v/K) dv = W dagger of V at r = -K log(n/m)/(2 pi), s = 1.
    """
    if n < 1 or m < 1:
        raise DomainError(f"kernel indices must be positive, got ({n}, {m})")
    return w_dagger(V, kernel_frequency(n, m, K), 1.0 + 0j, tol)


def conductor_localization(
    N: int, K: float, V: Window, separations: Sequence[float], tol: Optional[float] = None
) -> List[Dict[str, float]]:
    """
    Kernel modulus and band envelope at each separation n - m from m = N.
    """
    rows = []
    for separation in separations:
        n = N + int(round(separation))
        r = kernel_frequency(n, N, K)
        rows.append({
            "separation": float(separation),
            "r": r,
            "kernel_abs": abs(conductor_kernel(n, N, K, V, tol)),
            "envelope": decay_envelope(V, r, 1.0 + 0j, tol),
        })
    return rows


# --- two dimensions ----------------------------------------------------------

TWO_D_PANELS = 64
TWO_D_WIDTH = 4.0
TWO_D_PRE_GRID = 257


def _rectangle_nodes(support, panels: int, order: int):
    a, b, c, d = support
    x, wx = panel_nodes(np.linspace(a, b, panels + 1), order)
    y, wy = panel_nodes(np.linspace(c, d, panels + 1), order)
    return x, wx, y, wy


def total_variation(profile: TwoDPhaseProfile) -> float:
    """var(g) = double integral of |d^2 g / dx dy| over the support."""
    x, wx, y, wy = _rectangle_nodes(profile.support, TWO_D_PANELS, get_settings().panel_order)
    X, Y = np.meshgrid(x, y, indexing="ij")
    _, g_xy = profile.amplitude(X, Y)
    return float(np.einsum("i,ij,j->", wx, np.abs(g_xy), wy))


def check_hessian(profile: TwoDPhaseProfile, samples: int = 65) -> None:
    """
    Raises:
        DomainError: If f_xx < r1^2, f_yy < r2^2 or det < r1^2 r2^2 on the sample grid
    """
    a, b, c, d = profile.support
    X, Y = np.meshgrid(np.linspace(a, b, samples), np.linspace(c, d, samples), indexing="ij")
    _, _, _, f_xx, f_yy, f_xy = profile.phase(X, Y)
    r1s, r2s = profile.r1 ** 2, profile.r2 ** 2
    slack = 1.0 - 1e-12
    if np.min(f_xx) < r1s * slack:
        raise DomainError(f"f_xx falls below r1^2 = {r1s:.3e}")
    if np.min(f_yy) < r2s * slack:
        raise DomainError(f"f_yy falls below r2^2 = {r2s:.3e}")
    if np.min(f_xx * f_yy - f_xy ** 2) < r1s * r2s * slack:
        raise DomainError("Hessian determinant falls below r1^2 r2^2")


def second_derivative_bound_2d(profile: TwoDPhaseProfile) -> float:
    """var(g)/(r1 r2), after checking the Hessian conditions."""
    check_hessian(profile)
    return total_variation(profile) / (profile.r1 * profile.r2)


def _axis_breaks(lo: float, hi: float, rates: np.ndarray, grid: np.ndarray, width: float, min_panels: int):
    profile_max = np.max(np.abs(rates), axis=1)
    return panel_breaks(lo, hi, lambda t: np.interp(t, grid, profile_max), width, min_panels=min_panels)


def _tensor_integral(profile: TwoDPhaseProfile, width: float, min_panels: int):
    a, b, c, d = profile.support
    order = get_settings().panel_order
    gx = np.linspace(a, b, TWO_D_PRE_GRID)
    gy = np.linspace(c, d, TWO_D_PRE_GRID)
    GX, GY = np.meshgrid(gx, gy, indexing="ij")
    _, f_x, f_y, _, _, _ = profile.phase(GX, GY)
    x_breaks = _axis_breaks(a, b, f_x, gx, width, min_panels)
    y_breaks = _axis_breaks(c, d, f_y.T, gy, width, min_panels)
    x, wx = panel_nodes(x_breaks, order)
    y, wy = panel_nodes(y_breaks, order)

    row_sums = []
    rows_per_chunk = max(1, 2_000_000 // y.size)
    for start in range(0, x.size, rows_per_chunk):
        X, Y = np.meshgrid(x[start:start + rows_per_chunk], y, indexing="ij")
        f = profile.phase(X, Y)[0]
        g, _ = profile.amplitude(X, Y)
        row_sums.append((g * np.exp(1j * TWO_PI * f)) @ wy)
    rows = np.concatenate(row_sums) * wx
    value = complex(math.fsum(rows.real.tolist()), math.fsum(rows.imag.tolist()))
    return value, x_breaks.size - 1


def oracle_quadrature_2d(profile: TwoDPhaseProfile, tol: float = 1e-9) -> complex:
    """
    Tensor Gauss-Legendre panels resolving |f_x| and |f_y|, with one
    refinement doubling as the certificate.
    """
    coarse, panels = _tensor_integral(profile, TWO_D_WIDTH, min_panels=8)
    fine, _ = _tensor_integral(profile, TWO_D_WIDTH / 2.0, min_panels=2 * panels)
    if abs(fine - coarse) > tol * max(1.0, abs(fine)):
        raise ConvergenceError(f"2D quadrature refinement changed the value by {abs(fine - coarse):.3e}")
    return fine


def radial_quadratic_profile(scale: float, window: Window) -> TwoDPhaseProfile:
    """f = B(x^2 + y^2) against the product window g(x, y) = W(x) W(y)."""
    a, b = window.support

    def phase(X, Y):
        zeros = np.zeros_like(X)
        full = np.full_like(X, 2.0 * scale)
        return scale * (X ** 2 + Y ** 2), 2.0 * scale * X, 2.0 * scale * Y, full, full, zeros

    def amplitude(X, Y):
        shape = X.shape
        wx = window.derivatives(X.ravel(), 1)
        wy = window.derivatives(Y.ravel(), 1)
        return (wx[0] * wy[0]).reshape(shape), (wx[1] * wy[1]).reshape(shape)

    root = math.sqrt(2.0 * scale)
    return TwoDPhaseProfile(phase=phase, amplitude=amplitude, support=(a, b, a, b), r1=root, r2=root)
