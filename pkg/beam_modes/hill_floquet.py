"""Linear stability of one nonlinear mode with respect to another.

The perturbation ξ of mode n along the orbit of mode m solves a Hill equation.
Its monodromy over one period of the coefficient decides stability; three
rigorous criteria are evaluated beside it as a self-consistency check.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from .config import IntegratorConfig, get_settings, resolve_config
from .duffing import energy_from_amplitude, orbit_from_energy
from .errors import ConsistencyError, DomainError, NumericalQualityError
from .integrate import integrate
from .logger import get_logger
from .quality import with_tightening
from .schemas import (
    CriterionReport,
    EnergyRegime,
    HillProblem,
    LiZhangReport,
    ModeParams,
    MonodromyResult,
    NegativeCoefficientReport,
    StabilityReport,
    Verdict,
    ZhukovskiiReport,
)
from .special_functions import sigma_constant

logger = get_logger(__name__)

# strict inequality in the Li-Zhang test must survive roundoff at equality
_LI_ZHANG_MARGIN = 1e-12


def _check_modes(m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise DomainError(f"mode indices must be positive, got m={m}, n={n}")
    if m == n:
        raise DomainError("stability of a mode with respect to itself is not defined (m = n)")


def _problem_for_orbit(m: int, n: int, P: float, orbit) -> HillProblem:
    # a(t) depends on Θ², which has half the period of a sign-changing orbit
    coeff_period = orbit.period / 2.0 if orbit.sign_changing else orbit.period
    return HillProblem(m=m, n=n, P=P, orbit=orbit, coeff_period=coeff_period)


def build_hill(m: int, n: int, P: float, E: float) -> HillProblem:
    _check_modes(m, n)
    return _problem_for_orbit(m, n, P, orbit_from_energy(ModeParams(k=m, P=P), E))


def build_hill_from_amplitude(m: int, n: int, P: float, theta0: float) -> HillProblem:
    """Hill problem for the orbit released at rest from Θ_m(0) = theta0."""
    _check_modes(m, n)
    params = ModeParams(k=m, P=P)
    level = energy_from_amplitude(params, theta0)
    if level.regime is EnergyRegime.trivial:
        raise DomainError("theta0 = 0 is the trivial solution")
    orbit = orbit_from_energy(params, level.E, sign=1 if theta0 > 0 else -1)
    return _problem_for_orbit(m, n, P, orbit)


def classify_trace(trace: float, discriminant: float, marginal_tol: Optional[float] = None) -> Verdict:
    """Verdict from |trace| - 2 = discriminant / (|trace| + 2)."""
    tol = get_settings().marginal_tol if marginal_tol is None else marginal_tol
    excess = discriminant / (abs(trace) + 2.0)
    if excess < -tol:
        return Verdict.stable
    if excess > tol:
        return Verdict.unstable
    return Verdict.marginal


def monodromy_from_matrix(
    matrix: Sequence[Sequence[float]], period: float, marginal_tol: Optional[float] = None
) -> MonodromyResult:
    (m11, m12), (m21, m22) = ((float(a), float(b)) for a, b in matrix)
    det = m11 * m22 - m12 * m21
    trace = m11 + m22
    # equals trace² - 4 for a unimodular matrix, without the cancellation near |trace| = 2
    discriminant = (m11 - m22) ** 2 + 4.0 * m12 * m21
    if discriminant > 0.0:
        root = math.sqrt(discriminant)
        big = 0.5 * (trace + root) if trace >= 0.0 else 0.5 * (trace - root)
        multipliers = ((big, 0.0), (1.0 / big, 0.0))
    else:
        half_im = 0.5 * math.sqrt(-discriminant)
        multipliers = ((0.5 * trace, half_im), (0.5 * trace, -half_im))
    return MonodromyResult(
        matrix=((m11, m12), (m21, m22)),
        det=det,
        trace=trace,
        discriminant=discriminant,
        multipliers=multipliers,
        verdict=classify_trace(trace, discriminant, marginal_tol),
        period=period,
    )


def check_unimodular(result: MonodromyResult) -> MonodromyResult:
    drift = abs(result.det - 1.0)
    if drift > get_settings().det_tol:
        raise NumericalQualityError(f"monodromy determinant drifted by {drift:.3e}")
    return result


def monodromy(
    problem: HillProblem, config: IntegratorConfig | None = None, marginal_tol: Optional[float] = None
) -> MonodromyResult:
    """Monodromy over one coefficient period.

    The orbit and both fundamental solutions are integrated as one
    6-dimensional system (Θ, Θ', ξ1, ξ1', ξ2, ξ2') so that a(t) is evaluated on
    the integrator's own orbit rather than an interpolant.
    """
    params = problem.orbit.params
    linear = params.linear_coefficient
    cubic = float(params.k2 * params.k2)
    base, coupling = problem.base, problem.coupling

    def field(_t: float, y: np.ndarray) -> np.ndarray:
        theta = y[0]
        theta2 = theta * theta
        a = base + coupling * theta2
        return np.array([y[1], -linear * theta - cubic * theta2 * theta, y[3], -a * y[2], y[5], -a * y[4]])

    theta0, theta_dot0 = problem.orbit.canonical_initial
    initial = np.array([theta0, theta_dot0, 1.0, 0.0, 0.0, 1.0])

    def run(config: IntegratorConfig) -> MonodromyResult:
        final = integrate(field, initial, (0.0, problem.coeff_period), config, dense=False).final_state
        matrix = ((final[2], final[4]), (final[3], final[5]))
        return check_unimodular(monodromy_from_matrix(matrix, problem.coeff_period, marginal_tol))

    return with_tightening(run, resolve_config(config))


def coefficient_monodromy(
    coefficient: Callable[[float], float],
    period: float,
    config: IntegratorConfig | None = None,
    marginal_tol: Optional[float] = None,
) -> MonodromyResult:
    """Monodromy of ξ'' + a(t) ξ = 0 for an arbitrary ``period``-periodic coefficient."""
    if not period > 0.0:
        raise DomainError(f"period must be positive, got {period!r}")

    def field(t: float, y: np.ndarray) -> np.ndarray:
        a = coefficient(t)
        return np.array([y[1], -a * y[0], y[3], -a * y[2]])

    def run(config: IntegratorConfig) -> MonodromyResult:
        final = integrate(field, [1.0, 0.0, 0.0, 1.0], (0.0, period), config, dense=False).final_state
        matrix = ((final[0], final[2]), (final[1], final[3]))
        return check_unimodular(monodromy_from_matrix(matrix, period, marginal_tol))

    return with_tightening(run, resolve_config(config))


def floquet_exponent(result: MonodromyResult) -> float:
    """Growth rate ln(max |λ|) per unit time; zero for bounded solutions."""
    return math.log(result.spectral_radius) / result.period


def zhukovskii_test(a_min: float, a_max: float, period: float) -> ZhukovskiiReport:
    """ℓ²π²/T² <= a(t) <= (ℓ+1)²π²/T² for some integer ℓ >= 0 implies stability."""
    if a_min < 0.0 or a_max <= 0.0 or a_max < a_min:
        return ZhukovskiiReport(applies=False)
    base = (math.pi / period) ** 2
    ell = int(math.floor(math.sqrt(a_min / base)))
    while ell > 0 and ell * ell * base > a_min:
        ell -= 1
    while (ell + 1) ** 2 * base <= a_min:
        ell += 1
    lower, upper = ell * ell * base, (ell + 1) ** 2 * base
    if a_max > upper:
        return ZhukovskiiReport(applies=False)
    # a constant coefficient sitting on a resonance is only marginal
    if a_min == a_max and (a_min == lower or a_max == upper):
        return ZhukovskiiReport(applies=False)
    return ZhukovskiiReport(applies=True, ell=ell)


def zhukovskii_criterion(problem: HillProblem) -> ZhukovskiiReport:
    a_min, a_max = problem.coefficient_bounds
    return zhukovskii_test(a_min, a_max, problem.coeff_period)


def li_zhang_rhs() -> float:
    return 64.0 / 3.0 * sigma_constant() ** 4


def li_zhang_test(period: float, integral_a: float, integral_a_plus_sq: float) -> LiZhangReport:
    """∫a > 0 and T³ ∫(a⁺)² < (64/3) σ⁴ implies stability."""
    lhs = period**3 * integral_a_plus_sq
    rhs = li_zhang_rhs()
    applies = integral_a > 0.0 and lhs < rhs * (1.0 - _LI_ZHANG_MARGIN)
    return LiZhangReport(applies=applies, lhs=lhs, rhs=rhs)


def li_zhang_criterion(problem: HillProblem, config: IntegratorConfig | None = None) -> LiZhangReport:
    params = problem.orbit.params
    linear = params.linear_coefficient
    cubic = float(params.k2 * params.k2)
    base, coupling = problem.base, problem.coupling

    def field(_t: float, y: np.ndarray) -> np.ndarray:
        theta2 = y[0] * y[0]
        a = base + coupling * theta2
        positive = a if a > 0.0 else 0.0
        return np.array([y[1], -linear * y[0] - cubic * theta2 * y[0], a, positive * positive])

    theta0, theta_dot0 = problem.orbit.canonical_initial
    final = integrate(
        field, [theta0, theta_dot0, 0.0, 0.0], (0.0, problem.coeff_period), resolve_config(config), dense=False
    ).final_state
    return li_zhang_test(problem.coeff_period, float(final[2]), float(final[3]))


def negative_coefficient_criterion(problem: HillProblem) -> NegativeCoefficientReport:
    """a(t) <= 0 throughout implies instability."""
    _, a_max = problem.coefficient_bounds
    return NegativeCoefficientReport(applies=a_max <= 0.0)


def criteria_report(problem: HillProblem, config: IntegratorConfig | None = None) -> CriterionReport:
    return CriterionReport(
        zhukovskii=zhukovskii_criterion(problem),
        li_zhang=li_zhang_criterion(problem, config),
        negative_coeff=negative_coefficient_criterion(problem),
    )


def classify_problem(
    problem: HillProblem, config: IntegratorConfig | None = None, marginal_tol: Optional[float] = None
) -> StabilityReport:
    criteria = criteria_report(problem, config)
    result = monodromy(problem, config, marginal_tol)

    context = {"m": problem.m, "n": problem.n, "P": problem.P, "E": problem.orbit.E, "trace": result.trace}
    if criteria.implies_stable and result.verdict is Verdict.unstable:
        logger.error("Stability criterion contradicts monodromy", extra=context)
        raise ConsistencyError(f"a stability criterion applies but the monodromy is unstable ({context})")
    if criteria.implies_unstable and result.verdict is Verdict.stable:
        logger.error("Instability criterion contradicts monodromy", extra=context)
        raise ConsistencyError(f"the negative-coefficient criterion applies but the monodromy is stable ({context})")

    return StabilityReport(
        m=problem.m,
        n=problem.n,
        P=problem.P,
        E=problem.orbit.E,
        verdict=result.verdict,
        criteria=criteria,
        monodromy=result,
    )


def classify_stability(
    m: int,
    n: int,
    P: float,
    E: float,
    config: IntegratorConfig | None = None,
    marginal_tol: Optional[float] = None,
) -> StabilityReport:
    """Stability of mode m at energy E with respect to mode n."""
    return classify_problem(build_hill(m, n, P, E), config, marginal_tol)


def instability_energy_bound(m: int, n: int, P: float) -> Optional[float]:
    """E1 = (P - n²)(2m² - n² - P)/4 when n² < P and n² < m², else None.

    At or below E1 (and away from the homoclinic level) a(t) <= 0 along the
    whole orbit, so the mode is unstable.
    """
    m2, n2 = m * m, n * n
    if not (n2 < P and n2 < m2):
        return None
    return (P - n2) * (2 * m2 - n2 - P) / 4.0
