"""Which stability statement covers a triple (m, n, P).

Besides the row lookup this module holds the arithmetic behind it: the
membership of γ = n²/m² in the unions I_U and I_S, the resonance integers
of the well-bottom analysis, the integer scan of the quartic that could
defeat that analysis, and the large-energy limit map whose eigenvalues
decide stability for large energies.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import IntegratorConfig, resolve_config
from .errors import DomainError
from .hill_floquet import check_unimodular, instability_energy_bound, monodromy_from_matrix
from .integrate import find_zero_crossing, integrate
from .logger import get_logger
from .pool import chunked, ordered_map, resolve_jobs
from .quality import with_tightening
from .schemas import (
    FrequencyRatioClass,
    GammaMembership,
    MonodromyResult,
    Ppp2Hit,
    Prediction,
    RegimeReport,
    ResonanceDiagnostics,
    TableRow,
)
from .special_functions import comparison_holds

logger = get_logger(__name__)

RESONANCE_REL_TOL = 1e-12
DEFAULT_CERTIFICATE_EPS = Fraction(21, 22)

_ROW_TAGS = {
    TableRow.p_le_n2_lt_m2: ["stability0", "stability11"],
    TableRow.n2_lt_p_le_m2: ["stability2"],
    TableRow.n2_lt_m2_lt_p: ["stability3"],
    TableRow.p_lt_m2_lt_n2: ["stability12"],
    TableRow.p_eq_m2_lt_n2: ["t:limit-case"],
    TableRow.m2_lt_p_le_n2: ["stability22"],
    TableRow.m2_lt_n2_lt_p: ["stability4"],
}


def _check_positive(m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise DomainError(f"mode indices must be positive, got m={m}, n={n}")


# --- frequency ratio ------------------------------------------------------------------


def classify_gamma(m: int, n: int) -> FrequencyRatioClass:
    """Exact membership of n²/m² in I_U = ∪ ((k+1)(2k+1), (k+1)(2k+3)) and I_S = ∪ (k(2k+1), (k+1)(2k+1)).

    Every endpoint is an integer, so comparing n² with m²·endpoint decides
    membership without rounding.
    """
    _check_positive(m, n)
    m2, n2 = m * m, n * n
    k = 0
    while True:
        middle = m2 * (k + 1) * (2 * k + 1)
        high = m2 * (k + 1) * (2 * k + 3)
        if n2 < middle:
            membership = GammaMembership.in_is
        elif n2 == middle:
            membership = GammaMembership.boundary_lower
        elif n2 < high:
            membership = GammaMembership.in_iu
        elif n2 == high:
            membership = GammaMembership.boundary_upper
        else:
            k += 1
            continue
        return FrequencyRatioClass(m=m, n=n, gamma=n2 / m2, membership=membership, k_index=k)


# --- resonance quantities ---------------------------------------------------------------


def ppp2_value(m: int, n: int, L: Union[int, float]) -> Union[int, float]:
    """3m⁴L⁴ - (3m⁴ + 4n²m²)L² + 4n²m² - 4n⁴; exact for integer L."""
    m2, n2 = m * m, n * n
    L2 = L * L
    return 3 * m2 * m2 * L2 * L2 - (3 * m2 * m2 + 4 * n2 * m2) * L2 + 4 * n2 * m2 - 4 * n2 * n2


def _nearest_integer(ratio: float) -> Optional[int]:
    nearest = round(ratio)
    if abs(ratio - nearest) <= RESONANCE_REL_TOL * max(ratio, 1.0):
        return int(nearest)
    return None


def resonance_diagnostics(m: int, n: int, P: float) -> ResonanceDiagnostics:
    """Resonance integers ℓ, μ and the well-bottom ratio L with its quartic.

    ℓ and μ need m² > P and n² > P; L needs m² < P and n² > m². Fields
    outside their domain are left unset.
    """
    _check_positive(m, n)
    m2, n2 = m * m, n * n
    ell = mu = None
    L = L_is_integer = ppp2 = None

    if m2 > P and n2 > P:
        ratio = n * math.sqrt(n2 - P) / (m * math.sqrt(m2 - P))
        nearest = _nearest_integer(ratio)
        if nearest is not None:
            # the defining inequality is strict, so an exact resonance gives ℓ - 1
            mu = max(nearest - 1, 0)
            ell = nearest if nearest >= 2 else None
        else:
            mu = int(math.floor(ratio))

    if m2 < P and n2 > m2:
        L_squared = Fraction(2 * n2 * (n2 - m2)) / (m2 * (Fraction(P) - m2))
        root = math.isqrt(L_squared.numerator) if L_squared.denominator == 1 else None
        L_is_integer = root is not None and root * root == L_squared.numerator
        if L_is_integer:
            L = float(root)
            ppp2 = float(ppp2_value(m, n, root))
        else:
            L = math.sqrt(float(L_squared))
            ppp2 = float(ppp2_value(m, n, L))

    return ResonanceDiagnostics(ell=ell, mu=mu, L=L, L_is_integer=L_is_integer, ppp2_value=ppp2)


def _integer_roots(m: int, n: int) -> List[int]:
    # the quartic is a quadratic in u = L² with exactly one positive root when n > m
    m2, n2 = m * m, n * n
    a = 3 * m2 * m2
    b = -(3 * m2 * m2 + 4 * n2 * m2)
    c = 4 * n2 * m2 - 4 * n2 * n2
    discriminant = b * b - 4 * a * c
    if discriminant < 0:
        return []
    u_estimate = max((-b + math.isqrt(discriminant)) // (2 * a), 0)
    centre = math.isqrt(u_estimate)
    return [L for L in range(max(centre - 1, 1), centre + 3) if ppp2_value(m, n, L) == 0]


def _scan_chunk(ns: Sequence[int]) -> List[Tuple[int, int, int]]:
    return [(m, n, L) for n in ns for m in range(1, n) for L in _integer_roots(m, n)]


def ppp2_scan(n_max: int, jobs: Optional[int] = None) -> List[Ppp2Hit]:
    """Every (m, n, L) with 1 <= m < n <= n_max and an integer root L of the quartic."""
    if n_max < 2:
        raise DomainError(f"n_max must be at least 2, got {n_max}")
    workers = resolve_jobs(jobs)
    chunks = chunked(list(range(2, n_max + 1)), workers * 4)
    logger.info("Scanning quartic integer roots", extra={"n_max": n_max, "jobs": workers, "chunks": len(chunks)})
    hits = [hit for part in ordered_map(_scan_chunk, chunks, workers) for hit in part]
    if hits:
        logger.warning("Quartic has integer roots", extra={"hits": len(hits)})
    return [Ppp2Hit(m=m, n=n, L=L) for m, n, L in hits]


# --- table lookup ---------------------------------------------------------------------------


def _ordering(m: int, n: int, P: float) -> TableRow:
    m2, n2 = m * m, n * n
    if n2 < m2:
        if P <= n2:
            return TableRow.p_le_n2_lt_m2
        if P <= m2:
            return TableRow.n2_lt_p_le_m2
        return TableRow.n2_lt_m2_lt_p
    if P < m2:
        return TableRow.p_lt_m2_lt_n2
    if P == m2:
        return TableRow.p_eq_m2_lt_n2
    if P <= n2:
        return TableRow.m2_lt_p_le_n2
    return TableRow.m2_lt_n2_lt_p


def _high_energy(gamma_class: FrequencyRatioClass, hint_allowed: bool) -> Tuple[Prediction, Optional[Prediction]]:
    membership = gamma_class.membership
    if membership is GammaMembership.in_iu:
        return Prediction.unstable, None
    if membership is GammaMembership.in_is:
        return Prediction.stable, None
    if not hint_allowed:
        return Prediction.boundary, None
    # conjectured behaviour at the endpoints, never a proven verdict
    hint = Prediction.unstable if membership is GammaMembership.boundary_lower else Prediction.stable
    return Prediction.boundary, hint


def table_regime(m: int, n: int, P: float) -> RegimeReport:
    """Low- and high-energy predictions for the stability of mode m with respect to mode n."""
    _check_positive(m, n)
    if m == n:
        raise DomainError("no table row covers m = n")
    if not math.isfinite(P) or P < 0.0:
        raise DomainError(f"the table covers finite P >= 0, got {P!r}")

    row = _ordering(m, n, P)
    gamma_class = classify_gamma(m, n)
    resonance = resonance_diagnostics(m, n, P)
    hint = None

    if row is TableRow.p_le_n2_lt_m2:
        low, high, depends = Prediction.stable, Prediction.stable, False
    elif row in (TableRow.n2_lt_p_le_m2, TableRow.n2_lt_m2_lt_p):
        low, high, depends = Prediction.unstable, Prediction.stable, False
    else:
        depends = True
        high, hint = _high_energy(gamma_class, hint_allowed=row is TableRow.p_lt_m2_lt_n2)
        if row is TableRow.p_eq_m2_lt_n2:
            low = Prediction.unknown
        elif row is TableRow.p_lt_m2_lt_n2:
            low = Prediction.stable
        elif resonance.L_is_integer and resonance.ppp2_value == 0.0:
            low = Prediction.unknown
        else:
            low = Prediction.stable

    return RegimeReport(
        m=m,
        n=n,
        P=P,
        ordering=row,
        low_energy_prediction=low,
        high_energy_prediction=high,
        depends_on_gamma=depends,
        gamma_class=gamma_class,
        conjecture_hint=hint,
        theorem_refs=list(_ROW_TAGS[row]),
        resonance=resonance,
        instability_energy_bound=instability_energy_bound(m, n, P),
    )


def small_mode_certificate(m: int, n: int, P: float, eps: Union[float, Fraction] = DEFAULT_CERTIFICATE_EPS) -> bool:
    """True when 0 <= P <= n² <= ε²m² and the comparison inequality holds at ε.

    Then mode m is stable with respect to mode n at every positive energy.
    """
    _check_positive(m, n)
    ratio = Fraction(eps)
    if not 0 < ratio < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    n2, m2 = n * n, m * m
    if not (0.0 <= P <= n2 and n2 * ratio.denominator**2 <= m2 * ratio.numerator**2):
        return False
    return comparison_holds(float(ratio))


# --- large-energy limit map ----------------------------------------------------------------


def _limit_terms(eps: float, nu: float, nu_prime: float) -> Tuple[float, float]:
    """(linear term of the u equation, constant shift of the η coefficient)."""
    if nu != 0.0:
        if eps != 0.0 and (eps > 0.0) != (nu > 0.0):
            raise DomainError("eps must carry the sign of nu")
        return eps, (eps * nu_prime / nu if eps != 0.0 else 0.0)
    if eps < 0.0:
        raise DomainError("eps must be non-negative when nu = 0")
    return 0.0, eps * nu_prime


def first_zero_theta(eps: float = 0.0, config: IntegratorConfig | None = None) -> float:
    """First positive zero of u'' + εu + u³ = 0, u(0) = 0, u'(0) = 1.

    For ε = 0 this is 2^{5/4} σ.
    """

    def field(_t: float, y: np.ndarray) -> np.ndarray:
        return np.array([y[1], -eps * y[0] - y[0] ** 3])

    return find_zero_crossing(field, [0.0, 1.0], component=0, direction=-1, config=config)


def cazenave_limit_classify(
    gamma: float,
    eps: float = 0.0,
    nu: float = 1.0,
    nu_prime: float = 1.0,
    config: IntegratorConfig | None = None,
    marginal_tol: Optional[float] = None,
) -> MonodromyResult:
    """The map (a, b) -> -(η(θ), η'(θ)) of the large-energy limit and its verdict.

    η'' + γ(c + u²)η = 0 runs along the rescaled large mode u up to its first
    zero θ. With eps = 0 this is the unperturbed limit (c = 0); otherwise the
    finite-energy perturbation with E0 = ν²/(2ε²). Real eigenvalues mean
    Unstable and a unit-modulus pair means Stable.
    """
    if not math.isfinite(gamma) or gamma <= 0.0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    linear, shift = _limit_terms(eps, nu, nu_prime)
    config = resolve_config(config)

    def field(_t: float, y: np.ndarray) -> np.ndarray:
        u = y[0]
        weight = gamma * (shift + u * u)
        return np.array([y[1], -linear * u - u**3, y[3], -weight * y[2], y[5], -weight * y[4]])

    def run(config: IntegratorConfig) -> MonodromyResult:
        theta = first_zero_theta(linear, config)
        final = integrate(field, [0.0, 1.0, 1.0, 0.0, 0.0, 1.0], (0.0, theta), config, dense=False).final_state
        matrix = ((-final[2], -final[4]), (-final[3], -final[5]))
        return check_unimodular(monodromy_from_matrix(matrix, theta, marginal_tol))

    return with_tightening(run, config)
