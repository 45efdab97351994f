"""
Delta Service

Kloosterman's circle-method expansion of the indicator delta(n = 0):

    delta(n) = 2 Re sum_{1<=q<=Q<a<=Q+q, (a,q)=1} (1/(aq)) e(n a_bar/q) int_0^1 e(-nx/(aq)) dx

The x-integral is taken in closed form, so the identity holds to rounding.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from services.errors import DomainError
from services.parallel import parallel_map


@dataclass(frozen=True)
class CircleFrame:
    """One (q, a, a_bar) cell of the dissection at level Q; x is set when integrating."""
    Q: float
    q: int
    a: int
    a_bar: int
    x: Optional[float] = None

    def to_dict(self) -> dict:
        return {"Q": self.Q, "q": self.q, "a": self.a, "a_bar": self.a_bar, "x": self.x}


def mod_inverse(a: int, q: int) -> int:
    """
    The unique b in [0, q) with a*b = 1 (mod q); 0 when q = 1.

    Raises:
        DomainError: If q < 1 or gcd(a, q) != 1
    """
    if q < 1:
        raise DomainError(f"modulus must be positive, got {q}")
    if q == 1:
        return 0
    if math.gcd(a, q) != 1:
        raise DomainError(f"{a} is not invertible modulo {q}")
    return pow(a, -1, q)


def frames(Q: float) -> List[CircleFrame]:
    """All (q, a, a_bar) with 1 <= q <= Q < a <= Q + q and gcd(a, q) = 1, q then a ascending."""
    if Q < 1:
        raise DomainError(f"Q must be >= 1, got {Q}")
    base = math.floor(Q)
    out = []
    for q in range(1, base + 1):
        for a in range(base + 1, base + q + 1):
            if math.gcd(a, q) == 1:
                out.append(CircleFrame(Q=float(Q), q=q, a=a, a_bar=mod_inverse(a, q)))
    return out


@lru_cache(maxsize=64)
def _frame_arrays(Q: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    cells = frames(Q)
    q = np.array([f.q for f in cells], dtype=np.int64)
    a = np.array([f.a for f in cells], dtype=np.int64)
    a_bar = np.array([f.a_bar for f in cells], dtype=np.int64)
    return q, a, a_bar


def delta_terms(n: int, q: np.ndarray, a: np.ndarray, a_bar: np.ndarray) -> np.ndarray:
    """
    Real parts of (1/(aq)) e(n a_bar/q) X(n, aq) per frame.

    X(n, aq) = (1 - e(-theta)) / (2 pi i theta) = e(-theta/2) sinc(theta), theta = n/(aq).
    """
    aq = (a * q).astype(float)
    theta = n / aq
    # reduce n*a_bar mod q in integers before going to floats
    residue = np.mod(n * a_bar, q) / q
    return np.cos(2.0 * np.pi * (residue - theta / 2.0)) * np.sinc(theta) / aq


def delta_eval(n: int, Q: float, threads: int = 1) -> float:
    """
    Evaluate the circle-method expansion of delta(n) at level Q.

    Args:
        n: Integer argument
        Q: Dissection parameter, Q >= 1
        threads: Workers for the frame partition

    Returns:
        1.0 for n = 0 and 0.0 otherwise, up to rounding
    """
    q, a, a_bar = _frame_arrays(float(Q))
    chunks = np.array_split(np.arange(q.size), max(1, threads))
    parts = parallel_map(lambda idx: delta_terms(n, q[idx], a[idx], a_bar[idx]), chunks, threads)
    return 2.0 * math.fsum(np.concatenate(parts).tolist())


def weight_sum(Q: float) -> float:
    """2 sum_frames 1/(aq), the n = 0 case; equals 1."""
    q, a, _ = _frame_arrays(float(Q))
    return 2.0 * math.fsum((1.0 / (a * q).astype(float)).tolist())


def delta_grid(qmax: int, nmax: int, threads: int = 1) -> pd.DataFrame:
    """Residuals delta_eval(n, Q) - [n = 0] for Q = 1..qmax and n = -nmax..nmax."""
    cells = [(n, Q) for Q in range(1, qmax + 1) for n in range(-nmax, nmax + 1)]
    values = parallel_map(lambda cell: delta_eval(cell[0], cell[1]), cells, threads)
    rows = [
        {"n": n, "Q": Q, "residual": value - (1.0 if n == 0 else 0.0)}
        for (n, Q), value in zip(cells, values)
    ]
    return pd.DataFrame(rows, columns=["n", "Q", "residual"])


def unique_inverse_in_range(m: int, q: int, Q: float) -> int:
    """
    The a in (Q, Q+q] with a*m = 1 (mod q).

    Raises:
        DomainError: If gcd(m, q) != 1
    """
    base = math.floor(Q) + 1
    if q == 1:
        return base
    target = mod_inverse(m % q, q)
    return base + (target - base) % q
