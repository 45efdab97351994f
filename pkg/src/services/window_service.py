"""
Window Service

Smooth compactly supported weights: the bump V, the plateau window U and
the dyadic partition of unity W_J. Every window evaluates derivatives of
any order through Taylor jets, so the derivative-scale constants D_j and
the high-order integration-by-parts tails downstream share one code path.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import integrate, special

from services.errors import DomainError
from services.series import (
    compose_affine,
    jet_derivatives,
    jet_exp,
    jet_mul,
    jet_reciprocal,
    pole_jet,
)

JetFunction = Callable[[np.ndarray, int], np.ndarray]

# Plateau of W_0 is [-PLATEAU_FRACTION, PLATEAU_FRACTION], support [-1, 1]
PLATEAU_FRACTION = 0.75
BOUND_ORDER = 4
BOUND_SAMPLES = 4001


class WindowKind(str, Enum):
    BUMP = "bump"
    PLATEAU = "plateau"
    DYADIC_PIECE = "dyadic_piece"


@dataclass(frozen=True, eq=False)
class Window:
    """
    A smooth weight with evaluable derivatives.

    jet_fn(x, order) returns Taylor coefficients f^(j)(x)/j!, shape
    (order + 1, len(x)), before the normalization factor is applied.
    """
    kind: WindowKind
    support: Tuple[float, float]
    jet_fn: JetFunction = field(repr=False)
    plateau: Optional[Tuple[float, float]] = None
    normalization: float = 1.0
    label: Optional[int] = None
    derivative_bounds: Tuple[float, ...] = ()

    def taylor(self, x, order: int) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.normalization * self.jet_fn(x, order)

    def derivatives(self, x, order: int) -> np.ndarray:
        """Rows W(x), W'(x), ..., W^(order)(x)."""
        return jet_derivatives(self.taylor(x, order))

    def __call__(self, x):
        values = self.taylor(x, 0)[0]
        if np.ndim(x) == 0:
            return float(values[0])
        return values

    @property
    def knots(self) -> List[float]:
        points = list(self.support)
        if self.plateau is not None:
            points[1:1] = list(self.plateau)
        return points

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "support": list(self.support),
            "plateau": list(self.plateau) if self.plateau else None,
            "normalization": self.normalization,
            "label": self.label,
            "derivative_bounds": list(self.derivative_bounds),
        }


# --- jets of the building blocks -------------------------------------------

def _bump_jet(a: float, b: float) -> JetFunction:
    alpha = 2.0 / (b - a)

    def jet(x: np.ndarray, order: int) -> np.ndarray:
        out = np.zeros((order + 1, x.size))
        u = alpha * (x - a) - 1.0
        inside = np.abs(u) < 1.0
        if np.any(inside):
            u0 = u[inside]
            # exp(-1/(1-u^2)) = exp(h), h = (1/(u-1) - 1/(u+1)) / 2
            h = 0.5 * (pole_jet(u0, 1.0, order) - pole_jet(u0, -1.0, order))
            out[:, inside] = compose_affine(jet_exp(h), alpha)
        return out

    return jet


def _ramp_jet(y: np.ndarray, order: int) -> np.ndarray:
    """Jet of the logistic ramp sigma(1/(1-y) - 1/y) on 0 < y < 1."""
    out = np.zeros((order + 1, y.size))
    neg_g = pole_jet(y, 0.0, order) + pole_jet(y, 1.0, order)
    rising = neg_g[0] <= 0.0

    if np.any(rising):
        e = jet_exp(neg_g[:, rising])
        denom = e.copy()
        denom[0] += 1.0
        out[:, rising] = jet_reciprocal(denom)

    falling = ~rising
    if np.any(falling):
        e = jet_exp(-neg_g[:, falling])
        denom = e.copy()
        denom[0] += 1.0
        out[:, falling] = jet_mul(e, jet_reciprocal(denom))
    return out


def _ramp_value(y: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        g = 1.0 / (1.0 - y) - 1.0 / y
    return special.expit(g)


def _plateau_jet(a: float, b: float, c: float, d: float) -> JetFunction:
    def jet(x: np.ndarray, order: int) -> np.ndarray:
        out = np.zeros((order + 1, x.size))
        out[0, (x >= b) & (x <= c)] = 1.0

        left = (x > a) & (x < b)
        right = (x > c) & (x < d)
        if order == 0:
            out[0, left] = _ramp_value((x[left] - a) / (b - a))
            out[0, right] = _ramp_value((d - x[right]) / (d - c))
            return out
        if np.any(left):
            y = (x[left] - a) / (b - a)
            out[:, left] = compose_affine(_ramp_jet(y, order), 1.0 / (b - a))
        if np.any(right):
            y = (d - x[right]) / (d - c)
            out[:, right] = compose_affine(_ramp_jet(y, order), -1.0 / (d - c))
        return out

    return jet


# --- constructors ----------------------------------------------------------

def derivative_bounds(window: Window, order: int = BOUND_ORDER, scaled: bool = False) -> Tuple[float, ...]:
    """
    Grid maxima of |W^(j)| for j <= order.

    With scaled=True the maxima are of |x^j W^(j)(x)|, the form used for
    dyadic pieces.
    """
    a, b = window.support
    x = np.linspace(a, b, BOUND_SAMPLES)
    derivs = window.derivatives(x, order)
    if scaled:
        derivs = derivs * x[None, :] ** np.arange(order + 1)[:, None]
    return tuple(float(v) for v in np.max(np.abs(derivs), axis=1))


def window_integral(window: Window) -> float:
    a, b = window.support
    inner = sorted(p for p in window.knots if a < p < b)
    value, _ = integrate.quad(
        lambda x: window(x), a, b,
        points=inner or None, limit=400, epsabs=1e-15, epsrel=1e-14,
    )
    return float(value)


def make_bump(a: float, b: float, normalized: bool = False) -> Window:
    """
    The bump exp(-1/(1-u^2)) rescaled to [a, b].

    Args:
        a: Left end of the support
        b: Right end of the support
        normalized: Scale so that the integral is 1

    Returns:
        Window of kind BUMP with recorded derivative bounds

    Raises:
        DomainError: If a >= b
    """
    if not a < b:
        raise DomainError(f"degenerate bump interval [{a}, {b}]")
    window = Window(kind=WindowKind.BUMP, support=(float(a), float(b)), jet_fn=_bump_jet(a, b))
    if normalized:
        window = replace(window, normalization=1.0 / window_integral(window))
    return replace(window, derivative_bounds=derivative_bounds(window))


def make_plateau(a: float, b: float, c: float, d: float) -> Window:
    """Window equal to 1 on [b, c], supported on [a, d], monotone ramps between."""
    if not a < b < c < d:
        raise DomainError(f"plateau knots must satisfy a < b < c < d, got {(a, b, c, d)}")
    window = Window(
        kind=WindowKind.PLATEAU,
        support=(float(a), float(d)),
        plateau=(float(b), float(c)),
        jet_fn=_plateau_jet(a, b, c, d),
    )
    return replace(window, derivative_bounds=derivative_bounds(window))


def reflect(window: Window) -> Window:
    """The window x -> W(-x)."""
    inner = window.jet_fn

    def jet(x: np.ndarray, order: int) -> np.ndarray:
        return compose_affine(inner(-x, order), -1.0)

    a, b = window.support
    plateau = (-window.plateau[1], -window.plateau[0]) if window.plateau else None
    label = -window.label if window.label is not None else None
    return replace(window, support=(-b, -a), plateau=plateau, jet_fn=jet, label=label)


def _scaled_plateau(scale: float) -> Window:
    return make_plateau(-scale, -PLATEAU_FRACTION * scale, PLATEAU_FRACTION * scale, scale)


def _dyadic_piece(outer: Window, inner: Window, sign: int, label: int) -> Window:
    outer_jet, inner_jet = outer.jet_fn, inner.jet_fn

    def jet(x: np.ndarray, order: int) -> np.ndarray:
        out = outer_jet(x, order) - inner_jet(x, order)
        out[:, np.sign(x) != sign] = 0.0
        return out

    lo = PLATEAU_FRACTION * inner.support[1]
    hi = outer.support[1]
    support = (lo, hi) if sign > 0 else (-hi, -lo)
    window = Window(kind=WindowKind.DYADIC_PIECE, support=support, jet_fn=jet, label=label)
    return replace(window, derivative_bounds=derivative_bounds(window, scaled=True))


def partition_of_unity(range_bound: float) -> List[Window]:
    """
    Dyadic windows W_J, J = 0, +-1, +-2, +-4, ..., summing to 1 on [-R, R].

    W_0 is the plateau window on [-1, 1] (equal to 1 on [-3/4, 3/4]). The
    others are differences of consecutive dilates of W_0 restricted to one
    sign; the outermost dilate is stretched so its plateau covers R.
    """
    if range_bound < 1:
        raise DomainError(f"range_bound must be >= 1, got {range_bound}")
    levels = max(1, math.ceil(math.log2(range_bound)))
    scales = [2.0 ** j for j in range(levels)] + [range_bound / PLATEAU_FRACTION]
    plateaus = [_scaled_plateau(s) for s in scales]

    windows = [replace(plateaus[0], label=0)]
    for j in range(1, len(plateaus)):
        label = 2 ** (j - 1)
        windows.append(_dyadic_piece(plateaus[j], plateaus[j - 1], +1, label))
        windows.append(_dyadic_piece(plateaus[j], plateaus[j - 1], -1, -label))
    return windows


def partition_sum(windows: List[Window], x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.sum([w(x) for w in windows], axis=0)
