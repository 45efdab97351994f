"""
Truncated power-series arithmetic.

Two flavours live here:
- exact integer polynomial products (Kronecker substitution on Python ints),
  used for the q-expansion of the discriminant form;
- floating Taylor jets, arrays of shape (order + 1, npoints) holding
  f^(j)(x)/j!, used for window derivatives of arbitrary order.
"""

import math
from typing import List, Sequence

import numpy as np


# --- exact integer polynomials ---------------------------------------------

def _slot_width(bound: int) -> int:
    """Bit width (multiple of 8) of a slot holding signed values |c| <= bound."""
    bits = max(bound, 1).bit_length() + 2
    return (bits + 7) // 8 * 8


def _bias_constant(width: int, length: int) -> int:
    half = 1 << (width - 1)
    return half * ((1 << (width * length)) - 1) // ((1 << width) - 1)


def _pack(coeffs: Sequence[int], width: int) -> int:
    nbytes = width // 8
    half = 1 << (width - 1)
    digits = b"".join((c + half).to_bytes(nbytes, "little") for c in coeffs)
    return int.from_bytes(digits, "little") - _bias_constant(width, len(coeffs))


def _unpack(value: int, width: int, length: int) -> List[int]:
    nbytes = width // 8
    half = 1 << (width - 1)
    biased = (value + _bias_constant(width, length)) & ((1 << (width * length)) - 1)
    raw = biased.to_bytes(nbytes * length, "little")
    return [int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") - half for i in range(length)]


def poly_mul_exact(a: Sequence[int], b: Sequence[int], length: int) -> List[int]:
    """
    Exact product of two integer polynomials, truncated to `length` terms.

    Args:
        a: Coefficients of the first factor, constant term first
        b: Coefficients of the second factor
        length: Number of coefficients to keep

    Returns:
        The first `length` coefficients of a*b
    """
    a = list(a[:length])
    b = list(b[:length])
    if not a or not b:
        return [0] * length
    top_a = max(abs(c) for c in a)
    top_b = max(abs(c) for c in b)
    if top_a == 0 or top_b == 0:
        return [0] * length
    # slots hold the packed factors as well as the product coefficients
    bound = max(min(len(a), len(b)) * top_a * top_b, top_a, top_b)
    width = _slot_width(bound)
    product = _pack(a, width) * _pack(b, width)
    return _unpack(product, width, length)


def euler_cube(length: int) -> List[int]:
    """
    Coefficients of prod_{n>=1} (1 - q^n)^3 up to q^(length-1).

    Jacobi: the product equals sum_j (-1)^j (2j+1) q^(j(j+1)/2).
    """
    coeffs = [0] * length
    j = 0
    while j * (j + 1) // 2 < length:
        coeffs[j * (j + 1) // 2] = (-1) ** j * (2 * j + 1)
        j += 1
    return coeffs


# --- floating Taylor jets --------------------------------------------------

def jet_constant(value: float, order: int, npoints: int) -> np.ndarray:
    jet = np.zeros((order + 1, npoints))
    jet[0] = value
    return jet


def pole_jet(x0: np.ndarray, pole: float, order: int) -> np.ndarray:
    """Taylor coefficients of 1/(x - pole) at x0."""
    d = np.asarray(x0, dtype=float) - pole
    k = np.arange(order + 1)[:, None]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return (-1.0) ** k / d[None, :] ** (k + 1)


def jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    order = a.shape[0] - 1
    out = np.zeros_like(a, dtype=np.result_type(a, b))
    for k in range(order + 1):
        out[k] = np.sum(a[: k + 1] * b[k::-1], axis=0)
    return out


def jet_exp(a: np.ndarray) -> np.ndarray:
    """exp of a jet; points where exp(a_0) underflows get an all-zero jet."""
    order = a.shape[0] - 1
    out = np.zeros_like(a)
    with np.errstate(under="ignore"):
        out[0] = np.exp(a[0])
    alive = out[0] != 0.0
    safe = np.where(alive[None, :], a, 0.0)
    for k in range(1, order + 1):
        j = np.arange(1, k + 1)[:, None]
        out[k] = np.sum(j * safe[1: k + 1] * out[k - 1::-1][:k], axis=0) / k
    out[:, ~alive] = 0.0
    return out


def jet_reciprocal(a: np.ndarray) -> np.ndarray:
    order = a.shape[0] - 1
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, order + 1):
        out[k] = -np.sum(a[1: k + 1] * out[k - 1::-1][:k], axis=0) / a[0]
    return out


def jet_derivatives(jet: np.ndarray) -> np.ndarray:
    """Convert Taylor coefficients to derivatives f^(j)."""
    factorials = np.array([math.factorial(k) for k in range(jet.shape[0])], dtype=float)
    return jet * factorials[:, None]


def power_jet(x0: np.ndarray, exponent: float, order: int) -> np.ndarray:
    """Taylor coefficients of x**exponent at x0 > 0 (generalized binomial series)."""
    x0 = np.asarray(x0, dtype=float)
    out = np.zeros((order + 1, x0.size))
    coeff = 1.0
    for k in range(order + 1):
        out[k] = coeff * x0 ** (exponent - k)
        coeff *= (exponent - k) / (k + 1)
    return out


def compose_affine(jet: np.ndarray, scale: float) -> np.ndarray:
    """Jet of f(scale * x) given the jet of f at scale * x0."""
    k = np.arange(jet.shape[0])[:, None]
    return jet * float(scale) ** k
