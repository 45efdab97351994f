"""
Decomposition Service

Desk-scale instantiation of the identities behind conductor lowering:

    S(N) = S+(N) + S-(N),
    S+-(N) = (1/K) int_0^1 int V(v/K) sum_frames 1/(aq)
             sum_{n,m} lambda(n) n^(iv) m^(-i(t+v)) e(+-(n - m) theta) V(n/N) U(m/N) dv dx,
    theta = a_bar/q - x/(aq),

the Poisson-dual m-sum, the complete character sum mod qq', and the
split I** = I_1 + I_2 of the double integral with its error budget
B(C, tau).
"""

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import integrate

from services.calibration import CalibrationStore, get_calibration_store
from services.config import get_settings
from services.delta_service import CircleFrame, delta_eval, frames, mod_inverse, unique_inverse_in_range
from services.errors import ConvergenceError, DomainError, ResourceLimitError
from services.events import log_event
from services.forms_service import CuspForm
from services.lcrit_service import s_of_n
from services.oscillatory_service import PhaseProfile, w_dagger_grid, w_dagger_many
from services.parallel import parallel_map
from services.quadrature_service import panel_breaks, panel_nodes
from services.series import compose_affine, jet_derivatives, jet_mul
from services.window_service import Window, make_bump, make_plateau, reflect

TWO_PI = 2.0 * math.pi
OUTER_WIDTH = 4.0
OUTER_REFINEMENTS = 4
MESH_TOL = 1e-9
KERNEL_CHUNK = 1 << 16
SAMPLE_POINTS = 2001

FRAME_COLUMNS = ["q", "a", "a_bar", "re_plus", "im_plus", "re_minus", "im_minus"]
CHARSUM_COLUMNS = ["q", "q_prime", "a", "a_prime", "residues", "identity_value", "max_residual"]


def _fsum_complex(values: np.ndarray) -> complex:
    values = np.asarray(values).ravel()
    return complex(math.fsum(values.real.tolist()), math.fsum(np.imag(values).tolist()))


@lru_cache(maxsize=1)
def default_windows() -> Tuple[Window, Window]:
    """V: normalized bump on [1, 2]. U: plateau on [1/2, 5/2], equal to 1 on [1, 2]."""
    return make_bump(1.0, 2.0, normalized=True), make_plateau(0.5, 1.0, 2.0, 2.5)


# --- configuration -------------------------------------------------------------

@dataclass
class DecompConfig:
    """
    Frame parameters of a desk-scale decomposition.

    Q defaults to (N/K)^(1/2); an explicit Q is logged as an override.
    conductor is the window in the v-integral and defaults to V.
    """
    N: float
    K: float
    t: float
    Q: Optional[float] = None
    C: Optional[float] = None
    V: Optional[Window] = field(default=None, repr=False)
    U: Optional[Window] = field(default=None, repr=False)
    conductor: Optional[Window] = field(default=None, repr=False)

    def __post_init__(self):
        if self.N <= 0 or self.K <= 0 or self.t <= 0:
            raise DomainError(f"N, K, t must be positive, got ({self.N}, {self.K}, {self.t})")
        if not self.K < self.t:
            raise DomainError(f"conductor lowering needs K < t, got K = {self.K}, t = {self.t}")
        settings = get_settings()
        natural = math.sqrt(self.N / self.K)
        if self.Q is None:
            self.Q = natural
        elif not math.isclose(self.Q, natural):
            log_event("config_override", key="Q", value=self.Q, default=natural)
        if self.N > settings.decomp_n_cap:
            raise ResourceLimitError(f"N = {self.N} exceeds desk cap {settings.decomp_n_cap}")
        if self.Q > settings.decomp_q_cap:
            raise ResourceLimitError(f"Q = {self.Q} exceeds desk cap {settings.decomp_q_cap}")
        if self.Q < 1:
            raise DomainError(f"Q = {self.Q} < 1 leaves no frames")
        V, U = default_windows()
        if self.V is None:
            self.V = V
        if self.U is None:
            self.U = U
        if self.conductor is None:
            self.conductor = self.V

    def to_dict(self) -> dict:
        return {"N": self.N, "K": self.K, "t": self.t, "Q": self.Q, "C": self.C}


@dataclass
class DecompositionReport:
    s_plus: complex
    s_minus: complex
    s_n: complex
    residual: float
    error_estimate: float
    frame_count: int
    frame_table: pd.DataFrame = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "s_plus": [self.s_plus.real, self.s_plus.imag],
            "s_minus": [self.s_minus.real, self.s_minus.imag],
            "s_n": [self.s_n.real, self.s_n.imag],
            "residual": self.residual,
            "error_estimate": self.error_estimate,
            "frame_count": self.frame_count,
        }


# --- S+ and S- ------------------------------------------------------------------

def _sum_ranges(form: CuspForm, N: float, V: Window, U: Window):
    n = np.arange(max(1, math.ceil(V.support[0] * N)), math.floor(V.support[1] * N) + 1)
    m = np.arange(max(1, math.ceil(U.support[0] * N)), math.floor(U.support[1] * N) + 1)
    if n.size == 0 or m.size == 0:
        raise DomainError(f"N = {N} leaves an empty n or m range")
    coef_n = form.lambda_range(int(n[0]), int(n[-1])) * V(n / N)
    coef_m = U(m / N)
    return n, coef_n, m, coef_m


def _constant_rate(rate: float):
    return lambda z: np.full_like(z, rate)


def _frame_branches(frame: CircleFrame, n, coef_n, m, coef_m, K, t, u, weight_u, x, weight_x):
    """(S+ contribution, S- contribution) of one frame on a fixed (u, x) mesh."""
    aq = frame.a * frame.q
    # e(n a_bar / q) with n * a_bar reduced in integers
    en = np.exp(1j * TWO_PI * np.mod(n * frame.a_bar, frame.q) / frame.q)
    em = np.exp(1j * TWO_PI * np.mod(m * frame.a_bar, frame.q) / frame.q)
    ex_n = np.exp(-1j * TWO_PI * np.outer(n, x) / aq)
    ex_m = np.exp(-1j * TWO_PI * np.outer(m, x) / aq)
    pn = np.exp(1j * K * np.outer(u, np.log(n)))
    pm = np.exp(-1j * np.outer(t + K * u, np.log(m)))

    a_plus = pn @ ((coef_n * en)[:, None] * ex_n)
    b_plus = pm @ ((coef_m * np.conj(em))[:, None] * np.conj(ex_m))
    a_minus = pn @ ((coef_n * np.conj(en))[:, None] * np.conj(ex_n))
    b_minus = pm @ ((coef_m * em)[:, None] * ex_m)

    weights = weight_u[:, None] * weight_x[None, :] / aq
    return _fsum_complex(weights * a_plus * b_plus), _fsum_complex(weights * a_minus * b_minus)


def _branch_pass(form, cfg: DecompConfig, t: float, conductor: Window, width: float, threads: int):
    order = get_settings().panel_order
    n, coef_n, m, coef_m = _sum_ranges(form, cfg.N, cfg.V, cfg.U)
    smallest_aq = math.floor(cfg.Q) + 1
    x_rate = max(n[-1] - m[0], m[-1] - n[0]) / smallest_aq
    u_rate = cfg.K * math.log(max(n[-1], m[-1])) / TWO_PI
    x, wx = panel_nodes(panel_breaks(0.0, 1.0, _constant_rate(x_rate), width), order)
    lo, hi = conductor.support
    u, wu = panel_nodes(panel_breaks(lo, hi, _constant_rate(u_rate), width), order)
    weight_u = wu * conductor(u)

    cells = frames(cfg.Q)
    parts = parallel_map(
        lambda frame: _frame_branches(frame, n, coef_n, m, coef_m, cfg.K, t, u, weight_u, x, wx),
        cells,
        threads,
    )
    return cells, parts


def _branches(form: CuspForm, cfg: DecompConfig, t: float, conductor: Window, threads: int = 1):
    """Per-frame branch contributions with outer refinement doubling."""
    width = OUTER_WIDTH
    cells, previous = _branch_pass(form, cfg, t, conductor, width, threads)
    for _ in range(OUTER_REFINEMENTS):
        width /= 2.0
        cells, current = _branch_pass(form, cfg, t, conductor, width, threads)
        totals = [_fsum_complex(np.array([p[k] for p in current])) for k in (0, 1)]
        change = max(
            abs(_fsum_complex(np.array([c[k] - p[k] for c, p in zip(current, previous)])))
            for k in (0, 1)
        )
        if change <= MESH_TOL * max(1.0, abs(totals[0]), abs(totals[1])):
            return cells, current, change
        previous = current
    raise ConvergenceError(f"S+- mesh did not settle to {MESH_TOL:.1e}")


def decompose(form: CuspForm, cfg: DecompConfig, threads: int = 1) -> DecompositionReport:
    """S+, S- and S(N) with the relative residual |S - (S+ + S-)|/|S|."""
    cells, parts, change = _branches(form, cfg, cfg.t, cfg.conductor, threads)
    s_plus = _fsum_complex(np.array([p[0] for p in parts]))
    s_minus = _fsum_complex(np.array([p[1] for p in parts]))
    s_n = s_of_n(form, cfg.N, cfg.t, cfg.V)
    if s_n == 0:
        raise DomainError("S(N) vanishes; relative residual undefined")
    table = pd.DataFrame(
        [
            {
                "q": f.q, "a": f.a, "a_bar": f.a_bar,
                "re_plus": p.real, "im_plus": p.imag, "re_minus": mn.real, "im_minus": mn.imag,
            }
            for f, (p, mn) in zip(cells, parts)
        ],
        columns=FRAME_COLUMNS,
    )
    return DecompositionReport(
        s_plus=s_plus,
        s_minus=s_minus,
        s_n=s_n,
        residual=abs(s_n - (s_plus + s_minus)) / abs(s_n),
        error_estimate=change,
        frame_count=len(cells),
        frame_table=table,
    )


def s_plus_minus(form: CuspForm, cfg: DecompConfig, threads: int = 1) -> Tuple[complex, complex]:
    report = decompose(form, cfg, threads)
    return report.s_plus, report.s_minus


def s_of_n_via_delta(form: CuspForm, cfg: DecompConfig) -> complex:
    """
    sum_{n,m} lambda(n) m^(-it) V(n/N) U(m/N) kernel(n, m) delta(n - m), with the
    delta symbol evaluated in closed form at level Q. Collapses to S(N).
    """
    n, coef_n, m, coef_m = _sum_ranges(form, cfg.N, cfg.V, cfg.U)
    coef_m = coef_m * np.exp(-1j * cfg.t * np.log(m))
    deltas = {int(h): delta_eval(int(h), cfg.Q) for h in np.unique(np.subtract.outer(n, m))}

    rows_per_chunk = max(1, KERNEL_CHUNK // m.size)
    totals = []
    for start in range(0, n.size, rows_per_chunk):
        block = n[start:start + rows_per_chunk]
        r = -cfg.K * np.log(np.divide.outer(block, m).astype(float)) / TWO_PI
        kernel = w_dagger_grid(cfg.conductor, r.ravel(), [1.0 + 0j])[0].reshape(r.shape)
        delta = np.vectorize(deltas.__getitem__)(np.subtract.outer(block, m))
        totals.append((coef_n[start:start + rows_per_chunk, None] * coef_m[None, :] * kernel * delta).ravel())
    return _fsum_complex(np.concatenate(totals))


def conjugate_partner_residual(form: CuspForm, cfg: DecompConfig, threads: int = 1) -> float:
    """
    |S-[V reflected] - conj(S+[V])| / |S+[V]| at t = 0, where the reflection
    acts on the v-integral window only.
    """
    _, plus_parts, _ = _branches(form, cfg, 0.0, cfg.conductor, threads)
    _, minus_parts, _ = _branches(form, cfg, 0.0, reflect(cfg.conductor), threads)
    plus = _fsum_complex(np.array([p[0] for p in plus_parts]))
    minus = _fsum_complex(np.array([p[1] for p in minus_parts]))
    if plus == 0:
        raise DomainError("S+ vanishes at t = 0; relative residual undefined")
    return abs(minus - plus.conjugate()) / abs(plus)


# --- Poisson-dual m-sum ---------------------------------------------------------

@dataclass
class PoissonReport:
    q: int
    a: int
    x: float
    v: float
    direct: complex
    dual: complex
    residual: float
    m_cut: int
    truncation_change: float

    def to_dict(self) -> dict:
        return {
            "q": self.q, "a": self.a, "x": self.x, "v": self.v,
            "direct": [self.direct.real, self.direct.imag],
            "dual": [self.dual.real, self.dual.imag],
            "residual": self.residual,
            "m_cut": self.m_cut,
            "truncation_change": self.truncation_change,
        }


def dual_m_cut(cfg: DecompConfig, q: int) -> int:
    """ceil(4 (q t^(1+eps)/N + 1)): the |m| >> q t^(1+eps)/N cut with guard terms."""
    epsilon = get_settings().epsilon
    return math.ceil(4.0 * (q * cfg.t ** (1.0 + epsilon) / cfg.N + 1.0))


def _check_poisson_inputs(cfg: DecompConfig, q: int, a: int) -> int:
    settings = get_settings()
    if q < 1:
        raise DomainError(f"modulus must be positive, got {q}")
    if math.gcd(a, q) != 1:
        raise DomainError(f"gcd({a}, {q}) != 1")
    if q > settings.poisson_q_cap or cfg.N > settings.poisson_n_cap:
        raise ResourceLimitError(
            f"Poisson check capped at q <= {settings.poisson_q_cap}, N <= {settings.poisson_n_cap}"
        )
    return mod_inverse(a, q)


def poisson_direct(cfg: DecompConfig, q: int, a: int, x: float, v: float) -> complex:
    """sum_m m^(-i(t+v)) e(-m a_bar/q + m x/(aq)) U(m/N) over the support of U."""
    a_bar = _check_poisson_inputs(cfg, q, a)
    lo, hi = cfg.U.support
    m = np.arange(max(1, math.ceil(lo * cfg.N)), math.floor(hi * cfg.N) + 1)
    turns = -np.mod(m * a_bar, q) / q + m * x / (a * q)
    terms = cfg.U(m / cfg.N) * np.exp(-1j * (cfg.t + v) * np.log(m) + 1j * TWO_PI * turns)
    return _fsum_complex(terms)


def _dual_terms(cfg: DecompConfig, q: int, a: int, x: float, v: float, m_cut: int):
    a_bar = _check_poisson_inputs(cfg, q, a)
    ms = np.array([k for k in range(-m_cut, m_cut + 1) if (k - a_bar) % q == 0])
    big_t = cfg.t + v
    rs = cfg.N * (ms * a - x) / (a * q)
    values = w_dagger_many(cfg.U, rs, np.full(ms.size, 1.0 - 1j * big_t))
    scale = cfg.N * cmath.exp(-1j * big_t * math.log(cfg.N))
    return ms, scale * np.asarray(values)


def poisson_dual_m_sum(
    cfg: DecompConfig, q: int, a: int, x: float, v: float, m_cut: Optional[int] = None
) -> Tuple[complex, complex, float]:
    """
    (direct, dual, residual) for the Poisson rearrangement of the m-sum

        dual = N^(1-i(t+v)) sum_{m = a_bar (q), |m| <= m_cut} U dagger(N(ma - x)/(aq), 1 - i(t+v)).
    """
    m_cut = dual_m_cut(cfg, q) if m_cut is None else m_cut
    direct = poisson_direct(cfg, q, a, x, v)
    _, terms = _dual_terms(cfg, q, a, x, v, m_cut)
    dual = _fsum_complex(terms)
    return direct, dual, abs(direct - dual) / abs(direct)


def poisson_report(cfg: DecompConfig, q: int, a: int, x: float, v: float) -> PoissonReport:
    """Residual at the default cut and the change from doubling it, on one shared mesh."""
    m_cut = dual_m_cut(cfg, q)
    direct = poisson_direct(cfg, q, a, x, v)
    ms, terms = _dual_terms(cfg, q, a, x, v, 2 * m_cut)
    dual = _fsum_complex(terms[np.abs(ms) <= m_cut])
    doubled = _fsum_complex(terms)
    return PoissonReport(
        q=q, a=a, x=x, v=v,
        direct=direct,
        dual=dual,
        residual=abs(direct - dual) / abs(direct),
        m_cut=m_cut,
        truncation_change=abs(doubled - dual) / abs(direct),
    )


def poisson_draws(cfg: DecompConfig, q: int, count: int, seed: int) -> List[Tuple[int, float, float]]:
    """Random (a, x, v): a coprime to q in (Q, Q+q], x in [0, 1), v in [K, 2K)."""
    rng = np.random.default_rng([seed, q])
    base = math.floor(cfg.Q)
    choices = [a for a in range(base + 1, base + q + 1) if math.gcd(a, q) == 1]
    return [
        (int(rng.choice(choices)), float(rng.uniform(0.0, 1.0)), float(rng.uniform(cfg.K, 2.0 * cfg.K)))
        for _ in range(count)
    ]


# --- character sum --------------------------------------------------------------

def character_sum(q: int, q_prime: int, a: int, a_prime: int, n: int) -> complex:
    """sum_{beta mod qq'} e(beta (a'q - aq' + n)/(qq')) by direct summation."""
    if q < 1 or q_prime < 1:
        raise DomainError(f"moduli must be positive, got ({q}, {q_prime})")
    modulus = q * q_prime
    k = (a_prime * q - a * q_prime + n) % modulus
    beta = np.arange(modulus)
    return _fsum_complex(np.exp(2j * math.pi * ((beta * k) % modulus) / modulus))


def character_sum_expected(q: int, q_prime: int, a: int, a_prime: int, n: int) -> int:
    """qq' if n = aq' - a'q (mod qq'), else 0."""
    modulus = q * q_prime
    return modulus if (n - (a * q_prime - a_prime * q)) % modulus == 0 else 0


@lru_cache(maxsize=256)
def _residue_sums(modulus: int) -> np.ndarray:
    """sum_beta e(beta k / M) for every residue k, direct summation."""
    k = np.arange(modulus)
    phases = np.mod(np.outer(k, k), modulus) / modulus
    sums = np.exp(2j * math.pi * phases).sum(axis=1)
    sums.setflags(write=False)
    return sums


def character_sum_table(max_modulus: int) -> pd.DataFrame:
    """
    Exhaustive check over q, q' <= max_modulus, reduced residues a mod q,
    a' mod q' and every n mod qq'; one row per (q, q', a, a').
    """
    rows = []
    for q in range(1, max_modulus + 1):
        units_q = [a for a in range(1, q + 1) if math.gcd(a, q) == 1]
        for q_prime in range(1, max_modulus + 1):
            modulus = q * q_prime
            sums = _residue_sums(modulus)
            expected = np.zeros(modulus)
            expected[0] = modulus
            worst = float(np.max(np.abs(sums - expected)))
            for a in units_q:
                for a_prime in (b for b in range(1, q_prime + 1) if math.gcd(b, q_prime) == 1):
                    identity = character_sum(q, q_prime, a, a_prime, a * q_prime - a_prime * q)
                    rows.append({
                        "q": q, "q_prime": q_prime, "a": a, "a_prime": a_prime,
                        "residues": modulus,
                        "identity_value": identity.real,
                        "max_residual": max(worst, abs(identity - modulus)),
                    })
    return pd.DataFrame(rows, columns=CHARSUM_COLUMNS)


# --- error budget -----------------------------------------------------------------

@dataclass(frozen=True)
class ErrorBudget:
    """
    B(C, tau) = t^eps/(t^(1/2) K^(3/2)) min{1, 10K/|tau|} + (N/(QC))^(1/2)/(t^(1/2) K^(5/2)).
    """
    N: float
    K: float
    t: float
    Q: float
    epsilon: float

    @classmethod
    def from_config(cls, cfg: DecompConfig) -> "ErrorBudget":
        return cls(N=cfg.N, K=cfg.K, t=cfg.t, Q=cfg.Q, epsilon=get_settings().epsilon)

    def plateau_term(self) -> float:
        return self.t ** self.epsilon / (math.sqrt(self.t) * self.K ** 1.5)

    def tail_term(self, C: float) -> float:
        return math.sqrt(self.N / (self.Q * C)) / (math.sqrt(self.t) * self.K ** 2.5)

    def B_C_tau(self, C: float, tau: float) -> float:
        if C <= 0:
            raise DomainError(f"segment base must be positive, got {C}")
        cap = 1.0 if tau == 0 else min(1.0, 10.0 * self.K / abs(tau))
        return self.plateau_term() * cap + self.tail_term(C)


def error_budget(cfg: DecompConfig, C: float, tau: float) -> float:
    return ErrorBudget.from_config(cfg).B_C_tau(C, tau)


def integrated_error_budget(cfg: DecompConfig, C: float) -> Dict[str, float]:
    """
    int_{|tau| <= T} B(C, tau) d tau with T = N t^eps/(QC), numerically and in
    closed form, plus its ratio to K/(t^(1/2) K^(3/2)) + (N/QC)^(3/2)/(t^(1/2) K^(5/2)).
    """
    budget = ErrorBudget.from_config(cfg)
    T = cfg.N * cfg.t ** budget.epsilon / (cfg.Q * C)
    knee = 10.0 * cfg.K
    points = [p for p in (-knee, 0.0, knee) if -T < p < T]
    numeric, _ = integrate.quad(
        lambda tau: budget.B_C_tau(C, tau), -T, T, points=points or None, limit=200, epsabs=0.0, epsrel=1e-12
    )
    spread = 2.0 * T if T <= knee else 2.0 * knee * (1.0 + math.log(T / knee))
    closed = budget.plateau_term() * spread + 2.0 * T * budget.tail_term(C)
    shape = cfg.K / (math.sqrt(cfg.t) * cfg.K ** 1.5) + (cfg.N / (cfg.Q * C)) ** 1.5 / (
        math.sqrt(cfg.t) * cfg.K ** 2.5
    )
    return {
        "T": T,
        "numeric": numeric,
        "closed_form": closed,
        "relative_error": abs(numeric - closed) / closed,
        "shape": shape,
        "ratio_to_shape": numeric / shape,
    }


def segment_base(q: int) -> float:
    """The C with q in (C, 2C]: 1/2 for q = 1, else the largest power of two below q."""
    if q < 1:
        raise DomainError(f"modulus must be positive, got {q}")
    if q == 1:
        return 0.5
    return float(1 << ((q - 1).bit_length() - 1))


def dyadic_segments(Q: float) -> List[float]:
    """C = 1/2, 1, 2, 4, ... whose segments (C, 2C] cover 1 <= q <= Q."""
    if Q < 1:
        raise DomainError(f"Q must be >= 1, got {Q}")
    out, C = [], 0.5
    while C < math.floor(Q):
        out.append(C)
        C *= 2.0
    return out


# --- I** and its main term -----------------------------------------------------------

def _max_log(window: Window) -> float:
    lo, hi = window.support
    return max(abs(math.log(lo)), abs(math.log(hi)))


def _i_star_star_pass(cfg: DecompConfig, q: int, m: int, a: int, tau: float, width: float) -> complex:
    order = get_settings().panel_order
    N, K, t = cfg.N, cfg.K, cfg.t
    aq = a * q
    x_rate = (cfg.U.support[1] + cfg.V.support[1]) * N / aq
    v_rate = K * (_max_log(cfg.U) + _max_log(cfg.V)) / TWO_PI
    x, wx = panel_nodes(panel_breaks(0.0, 1.0, _constant_rate(x_rate), width), order)
    lo, hi = cfg.V.support
    v, wv = panel_nodes(panel_breaks(lo, hi, _constant_rate(v_rate), width), order)

    u_dagger = w_dagger_grid(cfg.U, N * (m * a - x) / aq, 1.0 - 1j * (t + K * v))
    v_dagger = w_dagger_grid(cfg.V, N * x / aq, 0.5 - 0.5j * tau + 1j * K * v)
    weights = (wv * cfg.V(v))[:, None] * wx[None, :]
    return _fsum_complex(weights * u_dagger * v_dagger)


def i_star_star(cfg: DecompConfig, q: int, m: int, tau: float) -> complex:
    """
    int_0^1 int V(v) U dagger(N(ma - x)/(aq), 1 - i(t + Kv))
        V dagger(Nx/(aq), 1/2 - i tau/2 + iKv) dv dx,

    a the inverse of m in (Q, Q+q]. Both transforms are nested panel
    quadratures over the outer (v, x) mesh.

    Raises:
        DomainError: If gcd(m, q) != 1
        ResourceLimitError: If a nested pass exceeds the work budget
        ConvergenceError: If outer refinement does not settle
    """
    if m == 0 or math.gcd(m, q) != 1:
        raise DomainError(f"m = {m} must be nonzero and coprime to q = {q}")
    a = unique_inverse_in_range(m, q, cfg.Q)
    width = OUTER_WIDTH
    previous = _i_star_star_pass(cfg, q, m, a, tau, width)
    for _ in range(OUTER_REFINEMENTS):
        width /= 2.0
        current = _i_star_star_pass(cfg, q, m, a, tau, width)
        if abs(current - previous) <= MESH_TOL * max(1.0, abs(current)):
            return current
        previous = current
    raise ConvergenceError(f"I** outer mesh did not settle at (q, m, tau) = ({q}, {m}, {tau})")


def i_one_inner_integral(cfg: DecompConfig, q: int, m: int, tau: float) -> float:
    """int_0^1 V(tau/(2K) - (t + tau/2) x/(Kma)) dx."""
    a = unique_inverse_in_range(m, q, cfg.Q)
    slope = (cfg.t + tau / 2.0) / (cfg.K * m * a)
    offset = tau / (2.0 * cfg.K)
    lo, hi = cfg.V.support
    crossings = sorted((offset - edge) / slope for edge in (lo, hi))
    points = [p for p in crossings if 0.0 < p < 1.0]
    value, _ = integrate.quad(
        lambda x: cfg.V(offset - slope * x), 0.0, 1.0, points=points or None, limit=200, epsabs=1e-15
    )
    return float(value)


def i_one_shape(cfg: DecompConfig, q: int, m: int, tau: float) -> complex:
    """I_1 without the constant c4; zero when V(-(t + tau/2) q/(2 pi N m)) vanishes."""
    big_t = cfg.t + tau / 2.0
    if big_t <= 0:
        raise DomainError(f"t + tau/2 must be positive, got {big_t}")
    if m >= 0:
        return 0j
    argument = -big_t * q / (TWO_PI * cfg.N * m)
    weight = cfg.V(argument)
    if weight == 0.0:
        return 0j
    power = cmath.exp((1.5 - 1j * big_t) * (math.log(argument) - 1.0))
    return power * weight * i_one_inner_integral(cfg, q, m, tau) / (math.sqrt(big_t) * cfg.K)


def i_one(
    cfg: DecompConfig, q: int, m: int, tau: float, c4: Optional[complex] = None,
    store: Optional[CalibrationStore] = None,
) -> complex:
    """
    c4/((t + tau/2)^(1/2) K) (-(t + tau/2) q/(2 pi e N m))^(3/2 - i(t + tau/2))
        V(-(t + tau/2) q/(2 pi N m)) int_0^1 V(tau/(2K) - (t + tau/2) x/(Kma)) dx.
    """
    if c4 is None:
        c4 = (store or get_calibration_store()).value("c4")
    return c4 * i_one_shape(cfg, q, m, tau)


def istar_grid(cfg: DecompConfig, size: int = 3) -> List[Tuple[int, int, float]]:
    """
    (q, m, tau) points: the first `size` moduli, for each the `size` negative m
    coprime to q nearest the centre of the main-term window, tau in {-K, 0, K}.
    """
    taus = [-cfg.K, 0.0, cfg.K][:size] if size <= 3 else list(np.linspace(-cfg.K, cfg.K, size))
    grid = []
    lo, hi = cfg.V.support
    for q in range(1, min(size, math.floor(cfg.Q)) + 1):
        centre = cfg.t * q / (math.pi * cfg.N * (lo + hi))
        candidates = sorted(
            (k for k in range(1, 8 * size * q + 1) if math.gcd(k, q) == 1),
            key=lambda k: (abs(k - centre), k),
        )[:size]
        for k in sorted(candidates):
            for tau in taus:
                grid.append((q, -k, float(tau)))
    return grid


def calibrate_c4(
    cfg: DecompConfig,
    reference: Optional[Tuple[int, int, float]] = None,
    store: Optional[CalibrationStore] = None,
    refit: bool = False,
    run_id: Optional[str] = None,
) -> complex:
    """
    c4 = I**/shape at a reference (q, m, tau), fitted once and frozen.

    Raises:
        DomainError: If the main term vanishes at every candidate reference
    """
    store = store or get_calibration_store()
    if reference is None:
        reference = next((p for p in istar_grid(cfg) if i_one_shape(cfg, *p) != 0), None)
        if reference is None:
            raise DomainError("no grid point with a nonvanishing main term")
    shape = i_one_shape(cfg, *reference)
    if shape == 0:
        raise DomainError(f"main term vanishes at reference {reference}")
    q, m, tau = reference
    point = {"q": q, "m": m, "tau": tau, **cfg.to_dict()}
    constant = store.fit("c4", lambda: i_star_star(cfg, q, m, tau) / shape, point, safety=1.0,
                         refit=refit, run_id=run_id)
    return constant.value


# --- v-integral phase --------------------------------------------------------------

def v_stationary_point(cfg: DecompConfig, q: int, m: int, tau: float, x: float) -> float:
    """v0 = -((2t + tau) x - tau m a)/(2 K m a)."""
    a = unique_inverse_in_range(m, q, cfg.Q)
    return -((2.0 * cfg.t + tau) * x - tau * m * a) / (2.0 * cfg.K * m * a)


def v_phase(cfg: DecompConfig, q: int, m: int, tau: float, x: float) -> PhaseProfile:
    """
    Phase and amplitude of the v-integral left after both transforms are
    replaced by their leading terms:

        f(v) = [(Kv - tau/2) log((2Kv - tau) aq/(4 pi e N x))
                - (t + Kv) log((t + Kv) aq/(2 pi e N (x - ma)))] / (2 pi),
        g(v) = V(v) V((2Kv - tau) aq/(4 pi N x)) U((t + Kv) aq/(2 pi N (x - ma))).

    Raises:
        DomainError: If m >= 0, x is outside (0, 1] or 2Kv - tau vanishes on supp V
    """
    if m >= 0:
        raise DomainError(f"the v-phase is set up for m < 0, got {m}")
    if not 0.0 < x <= 1.0:
        raise DomainError(f"x must lie in (0, 1], got {x}")
    N, K, t = cfg.N, cfg.K, cfg.t
    a = unique_inverse_in_range(m, q, cfg.Q)
    aq = a * q
    lo, hi = cfg.V.support
    if 2.0 * K * lo - tau <= 0:
        raise DomainError(f"2Kv - tau must stay positive on [{lo}, {hi}]")
    alpha = aq / (2.0 * TWO_PI * N * x)
    gamma = aq / (TWO_PI * N * (x - m * a))

    def phase(v, order: int) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        p = 2.0 * K * v - tau
        r = t + K * v
        rows = [((K * v - tau / 2.0) * (np.log(p * alpha) - 1.0) - r * (np.log(r * gamma) - 1.0)) / TWO_PI]
        if order >= 1:
            rows.append(K * (np.log(p * alpha) - np.log(r * gamma)) / TWO_PI)
        for j in range(2, order + 1):
            scale = K * (-1) ** j * math.factorial(j - 2) / TWO_PI
            rows.append(scale * ((2.0 * K) ** (j - 1) / p ** (j - 1) - K ** (j - 1) / r ** (j - 1)))
        return np.array(rows)

    def amplitude(v, order: int) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        own = cfg.V.taylor(v, order)
        inner = compose_affine(cfg.V.taylor(2.0 * K * alpha * v - tau * alpha, order), 2.0 * K * alpha)
        outer = compose_affine(cfg.U.taylor(gamma * (t + K * v), order), K * gamma)
        return jet_derivatives(jet_mul(jet_mul(own, inner), outer))

    theta = N * x / aq
    slopes = phase(np.linspace(lo, hi, SAMPLE_POINTS), 1)[1]
    monotone = bool(np.all(slopes > 0) or np.all(slopes < 0))
    return PhaseProfile(
        phase=phase,
        amplitude=amplitude,
        support=(lo, hi),
        theta_f=theta,
        omega_f=theta / K,
        omega_g=min(1.0, theta / K),
        lambda_=float(np.min(np.abs(slopes))) if monotone else None,
    )
