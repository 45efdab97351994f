"""
Forms Service

Generates and serves the Fourier coefficients tau(n) of the weight-12
level-1 cusp form Delta, their normalized Hecke eigenvalues lambda(n),
and the exact Hecke / average-size checks run against them.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.config import get_settings
from services.errors import DomainError, ResourceLimitError
from services.events import log_event
from services.series import euler_cube, poly_mul_exact


@dataclass(frozen=True, eq=False)
class CuspForm:
    """Immutable coefficient table tau(1..n_max) of a level-1 eigenform."""
    weight: int
    tau_cache: Tuple[int, ...]
    lambdas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.tau_cache or self.tau_cache[0] != 1:
            raise DomainError("coefficient table must start with tau(1) = 1")
        n = np.arange(1, len(self.tau_cache) + 1, dtype=float)
        half = (self.weight - 1) / 2.0
        values = np.array([float(t) for t in self.tau_cache]) / n ** half
        values.setflags(write=False)
        object.__setattr__(self, "lambdas", values)

    @property
    def n_max(self) -> int:
        return len(self.tau_cache)

    def tau(self, n: int) -> int:
        self._check_index(n)
        return self.tau_cache[n - 1]

    def lambda_value(self, n: int) -> float:
        """lambda(n) = tau(n) / n^((k-1)/2)."""
        self._check_index(n)
        return float(self.lambdas[n - 1])

    def lambda_range(self, start: int, stop: int) -> np.ndarray:
        """lambda(start..stop) inclusive as a float array."""
        if start < 1 or stop < start - 1:
            raise DomainError(f"invalid coefficient range [{start}, {stop}]")
        if stop > self.n_max:
            raise ResourceLimitError(
                f"coefficient cache too short: need n <= {stop}, have n_max = {self.n_max}"
            )
        return self.lambdas[start - 1:stop]

    def _check_index(self, n: int) -> None:
        if n < 1:
            raise DomainError(f"coefficient index must be positive, got {n}")
        if n > self.n_max:
            raise ResourceLimitError(
                f"coefficient cache too short: need n = {n}, have n_max = {self.n_max}"
            )


@dataclass
class HeckeReport:
    pairs_checked: int
    recursions_checked: int
    violations: List[str]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "pairs_checked": self.pairs_checked,
            "recursions_checked": self.recursions_checked,
            "violations": list(self.violations),
            "passed": self.passed,
        }


def generate_tau(n_max: int, max_coefficients: Optional[int] = None) -> List[int]:
    """
    Exact tau(1..n_max) for Delta = q * prod (1 - q^n)^24.

    The 24th power is the 8th power of the Jacobi cube series, built with
    three exact squarings truncated at each step.

    Args:
        n_max: Number of coefficients
        max_coefficients: Memory budget; defaults to the configured value

    Returns:
        List [tau(1), ..., tau(n_max)]

    Raises:
        DomainError: If n_max < 1
        ResourceLimitError: If n_max exceeds the budget
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    budget = max_coefficients if max_coefficients is not None else get_settings().max_coefficients
    if n_max > budget:
        raise ResourceLimitError(f"n_max = {n_max} exceeds coefficient budget {budget}")

    series = euler_cube(n_max)
    for _ in range(3):
        series = poly_mul_exact(series, series, n_max)
    # Delta = q * P^8, so tau(n) is the coefficient of q^(n-1)
    return series


def divisor_count(n: int) -> int:
    if n < 1:
        raise DomainError(f"divisor_count needs n >= 1, got {n}")
    count = 0
    root = math.isqrt(n)
    for d in range(1, root + 1):
        if n % d == 0:
            count += 2
    if root * root == n:
        count -= 1
    return count


@lru_cache(maxsize=4)
def divisor_counts(n_max: int) -> np.ndarray:
    """d(1..n_max) by a sieve; index 0 holds d(1). Read-only."""
    counts = np.zeros(n_max + 1, dtype=np.int64)
    for d in range(1, n_max + 1):
        counts[d::d] += 1
    counts = counts[1:]
    counts.setflags(write=False)
    return counts


def _primes_up_to(limit: int) -> List[int]:
    if limit < 2:
        return []
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return [int(p) for p in np.flatnonzero(sieve)]


def check_hecke(form: CuspForm, limit: int) -> HeckeReport:
    """
    Exact integer Hecke checks up to `limit`.

    Multiplicativity tau(m)tau(n) = tau(mn) for coprime m, n with mn <= limit,
    and tau(p)tau(p^r) = tau(p^(r+1)) + p^(k-1) tau(p^(r-1)) for p^(r+1) <= limit.
    """
    if limit > form.n_max:
        raise ResourceLimitError(f"Hecke limit {limit} exceeds n_max = {form.n_max}")
    tau = form.tau_cache
    violations: List[str] = []
    pairs = 0
    for m in range(2, math.isqrt(limit) + 1):
        for n in range(m + 1, limit // m + 1):
            if math.gcd(m, n) != 1:
                continue
            pairs += 1
            if tau[m - 1] * tau[n - 1] != tau[m * n - 1]:
                violations.append(f"multiplicativity m={m} n={n}")

    recursions = 0
    scale = form.weight - 1
    for p in _primes_up_to(math.isqrt(limit)):
        power = p
        previous = 1
        while power * p <= limit:
            recursions += 1
            lhs = tau[p - 1] * tau[power - 1]
            rhs = tau[power * p - 1] + p ** scale * tau[previous - 1]
            if lhs != rhs:
                violations.append(f"prime-power recursion p={p} p^r={power}")
            previous, power = power, power * p
    return HeckeReport(pairs_checked=pairs, recursions_checked=recursions, violations=violations)


def check_deligne(form: CuspForm) -> int:
    """Count of n <= n_max with |lambda(n)| > d(n); zero for a genuine eigenform."""
    d = divisor_counts(form.n_max).astype(float)
    return int(np.count_nonzero(np.abs(form.lambdas) > d * (1.0 + 1e-12)))


def rankin_average(form: CuspForm, x: int) -> float:
    """Sum of |lambda(n)|^2 over n <= x."""
    if x < 1:
        raise DomainError(f"rankin_average needs x >= 1, got {x}")
    values = form.lambda_range(1, x)
    return math.fsum((values * values).tolist())


def rankin_band(form: CuspForm, xs: Sequence[int]) -> Tuple[Dict[int, float], float]:
    """
    Normalized averages sum_{n<=x} |lambda(n)|^2 / x per x, and max/min over them.
    """
    ratios = {int(x): rankin_average(form, int(x)) / x for x in xs}
    values = list(ratios.values())
    return ratios, max(values) / min(values)


def save_coefficients(form: CuspForm, path: Path) -> None:
    """Write the cache: header `weight=<k> n_max=<N>`, then one integer per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = "\n".join(str(t) for t in form.tau_cache)
    path.write_text(f"weight={form.weight} n_max={form.n_max}\n{body}\n", encoding="utf-8")


def load_coefficients(path: Path) -> CuspForm:
    """
    Read a coefficient cache written by save_coefficients.

    Raises:
        DomainError: If the header or body is malformed
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DomainError(f"empty coefficient file: {path}")
    header: Dict[str, str] = {}
    for token in lines[0].split():
        if "=" not in token:
            raise DomainError(f"malformed coefficient header: {lines[0]!r}")
        key, value = token.split("=", 1)
        header[key] = value
    try:
        weight = int(header["weight"])
        n_max = int(header["n_max"])
    except (KeyError, ValueError) as e:
        raise DomainError(f"malformed coefficient header: {lines[0]!r}") from e
    body = [line for line in lines[1:] if line.strip()]
    if len(body) != n_max:
        raise DomainError(f"header declares n_max={n_max} but file holds {len(body)} coefficients")
    try:
        tau = tuple(int(line) for line in body)
    except ValueError as e:
        raise DomainError(f"non-integer coefficient in {path}") from e
    return CuspForm(weight=weight, tau_cache=tau)


class FormService:
    """Generates coefficient tables once and serves truncations of the largest one."""

    def __init__(self):
        self._form: Optional[CuspForm] = None

    def get_form(self, n_max: int, run_id: Optional[str] = None) -> CuspForm:
        settings = get_settings()
        if settings.weight != 12:
            raise DomainError(f"only weight 12 is generated, configured weight = {settings.weight}")
        if self._form is None or self._form.n_max < n_max:
            tau = generate_tau(n_max, settings.max_coefficients)
            self._form = CuspForm(weight=12, tau_cache=tuple(tau))
            log_event("coefficients_generated", run_id=run_id, n_max=n_max, weight=12)
        if self._form.n_max == n_max:
            return self._form
        return CuspForm(weight=12, tau_cache=self._form.tau_cache[:n_max])


_form_service: Optional[FormService] = None


def get_form_service() -> FormService:
    global _form_service
    if _form_service is None:
        _form_service = FormService()
    return _form_service
