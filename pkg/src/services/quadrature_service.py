"""
Quadrature Service

Phase-resolving Gauss-Legendre panel quadrature. Panel breaks come from
the cumulative density (1 + |f'|)/c, so no panel spans more than about c
oscillations; convergence is certified by halving c until successive
results agree.

Integrands are vectorized: integrand(x) takes a flat array of nodes and
returns values of shape (..., len(x)), so a family of integrals sharing a
mesh is computed in one pass.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple, Union

import numpy as np

from services.config import get_settings
from services.errors import ConvergenceError, DomainError

Integrand = Callable[[np.ndarray], np.ndarray]
Frequency = Callable[[np.ndarray], np.ndarray]

PRE_GRID = 2049
MIN_PANELS = 8
CHUNK_PANELS = 2048
MAX_REFINEMENTS = 12


@dataclass
class QuadratureResult:
    value: Union[complex, np.ndarray]
    panels: int
    error_estimate: float
    refinements: int

    def to_dict(self) -> dict:
        value = self.value
        if isinstance(value, np.ndarray):
            value = [complex(v) for v in value.ravel()]
        return {
            "value": str(value),
            "panels": self.panels,
            "error_estimate": self.error_estimate,
            "refinements": self.refinements,
        }


@lru_cache(maxsize=16)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_breaks(
    a: float,
    b: float,
    frequency: Optional[Frequency],
    width: float,
    min_panels: int = MIN_PANELS,
) -> np.ndarray:
    """Break points on [a, b] with panels of width about width/(1 + |f'|)."""
    if not a < b:
        raise DomainError(f"empty integration interval [{a}, {b}]")
    grid = np.linspace(a, b, PRE_GRID)
    if frequency is None:
        local = np.zeros_like(grid)
    else:
        local = np.abs(np.asarray(frequency(grid), dtype=float))
        if local.ndim > 1:
            local = local.reshape(-1, grid.size).max(axis=0)
    density = (1.0 + local) / width
    steps = 0.5 * (density[1:] + density[:-1]) * np.diff(grid)
    cumulative = np.concatenate([[0.0], np.cumsum(steps)])
    count = max(min_panels, int(math.ceil(cumulative[-1])))
    targets = np.linspace(0.0, cumulative[-1], count + 1)
    breaks = np.interp(targets, cumulative, grid)
    breaks[0], breaks[-1] = a, b
    return breaks


def panel_nodes(breaks: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Flat Gauss-Legendre nodes and weights over all panels."""
    nodes, weights = gauss_legendre(order)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    w = half[:, None] * weights[None, :]
    return x.ravel(), w.ravel()


def integrate_panels(integrand: Integrand, breaks: np.ndarray, order: int):
    """Fixed-mesh panel sum; a scalar integral is reduced with math.fsum."""
    nodes, weights = gauss_legendre(order)
    panel_sums = []
    total_panels = breaks.size - 1
    for start in range(0, total_panels, CHUNK_PANELS):
        stop = min(start + CHUNK_PANELS, total_panels)
        lo, hi = breaks[start:stop], breaks[start + 1:stop + 1]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        values = np.asarray(integrand(x))
        values = values.reshape(values.shape[:-1] + (stop - start, order))
        panel_sums.append(np.sum(values * (half[:, None] * weights[None, :]), axis=-1))
    sums = np.concatenate(panel_sums, axis=-1)
    if sums.ndim == 1:
        return complex(math.fsum(sums.real.tolist()), math.fsum(np.imag(sums).tolist()))
    return sums.sum(axis=-1)


def oscillatory_quadrature(
    integrand: Integrand,
    a: float,
    b: float,
    frequency: Optional[Frequency] = None,
    tol: Optional[float] = None,
    width: Optional[float] = None,
    order: Optional[int] = None,
    max_panels: Optional[int] = None,
) -> QuadratureResult:
    """
    Integrate over [a, b] with refinement doubling.

    Args:
        integrand: Vectorized integrand, output shape (..., len(x))
        a: Left end
        b: Right end
        frequency: |f'(x)| in cycles per unit length (max over a batch)
        tol: Agreement required between successive refinements, relative
            to max(1, |I|)
        width: Initial panel width parameter c
        order: Gauss-Legendre nodes per panel
        max_panels: Panel budget

    Returns:
        QuadratureResult from the finest mesh

    Raises:
        ConvergenceError: If the panel budget is exhausted first
    """
    settings = get_settings()
    tol = settings.quad_tol if tol is None else tol
    width = settings.panel_width if width is None else width
    order = settings.panel_order if order is None else order
    max_panels = settings.max_panels if max_panels is None else max_panels

    breaks = panel_breaks(a, b, frequency, width)
    previous = integrate_panels(integrand, breaks, order)
    for refinement in range(1, MAX_REFINEMENTS + 1):
        width /= 2.0
        breaks = panel_breaks(a, b, frequency, width, min_panels=2 * (breaks.size - 1))
        if breaks.size - 1 > max_panels:
            raise ConvergenceError(
                f"panel budget {max_panels} exhausted on [{a}, {b}] before reaching tol {tol:.1e}"
            )
        current = integrate_panels(integrand, breaks, order)
        change = float(np.max(np.abs(np.asarray(current) - np.asarray(previous))))
        scale = max(1.0, float(np.max(np.abs(np.asarray(current)))))
        if change <= tol * scale:
            return QuadratureResult(
                value=current, panels=breaks.size - 1, error_estimate=change, refinements=refinement
            )
        previous = current
    raise ConvergenceError(f"no agreement to {tol:.1e} after {MAX_REFINEMENTS} refinements on [{a}, {b}]")
