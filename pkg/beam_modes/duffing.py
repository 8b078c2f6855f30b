"""Nonlinear modes: the Duffing equation

    Θ'' + k²(k² - P) Θ + k⁴ Θ³ = 0

with its energy levels, turning points, periods and the homoclinic loop that
appears under supercritical compression (k² < P).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import roots_legendre

from .config import IntegratorConfig, get_settings, resolve_config
from .errors import DomainError, NumericalQualityError
from .integrate import Trajectory, integrate
from .logger import get_logger
from .quality import with_tightening
from .schemas import DuffingOrbit, EnergyLevel, EnergyRegime, ModeParams, ScaledEnergyFunctions
from .special_functions import elliptic_k_complement, sigma_constant

logger = get_logger(__name__)


def _tolerance(E: float) -> float:
    return get_settings().classification_tol * (1.0 + abs(E))


def duffing_field(params: ModeParams):
    linear = params.linear_coefficient
    cubic = float(params.k2 * params.k2)

    def field(_t: float, y: np.ndarray) -> np.ndarray:
        theta = y[0]
        return np.array([y[1], -linear * theta - cubic * theta**3])

    return field


def energy_along(params: ModeParams, theta, theta_dot):
    """Energy of (Θ, Θ') pairs; accepts scalars or arrays."""
    theta2 = np.square(theta)
    return 0.5 * np.square(theta_dot) + 0.5 * params.linear_coefficient * theta2 + 0.25 * params.k2**2 * theta2**2


def classify_energy(params: ModeParams, E: float) -> EnergyRegime:
    """Regime of an energy value, or DomainError when no orbit carries it."""
    if not math.isfinite(E):
        raise DomainError(f"energy must be finite, got {E!r}")
    tol = _tolerance(E)
    bottom = params.bottom_energy
    if bottom is None:
        if E > 0.0:
            return EnergyRegime.positive_energy
        raise DomainError(f"energy must be positive when k^2 >= P (k={params.k}, P={params.P}), got {E!r}")
    if E < bottom - tol:
        raise DomainError(f"energy {E!r} lies below the bottom of the well {bottom!r}")
    if abs(E - bottom) <= tol:
        return EnergyRegime.bottom_of_well
    if abs(E) <= tol:
        return EnergyRegime.homoclinic
    return EnergyRegime.negative_energy_well if E < 0.0 else EnergyRegime.positive_energy


def energy_of(params: ModeParams, alpha: float, beta: float) -> EnergyLevel:
    E = float(energy_along(params, alpha, beta))
    if alpha == 0.0 and beta == 0.0:
        return EnergyLevel(E=E, regime=EnergyRegime.trivial)
    if params.bottom_energy is None:
        # positive by construction; underflow of tiny data still counts as an orbit
        return EnergyLevel(E=E, regime=EnergyRegime.positive_energy)
    return EnergyLevel(E=E, regime=classify_energy(params, max(E, params.bottom_energy)))


def energy_from_amplitude(params: ModeParams, theta0: float) -> EnergyLevel:
    """Energy of the orbit released at rest from Θ(0) = theta0."""
    return energy_of(params, theta0, 0.0)


def _orbit_regime(params: ModeParams, E: float) -> EnergyRegime:
    regime = classify_energy(params, E)
    if regime is EnergyRegime.homoclinic:
        raise DomainError("E = 0 is the homoclinic level for k^2 < P; it carries no periodic orbit")
    return regime


def _positive_turning_points(params: ModeParams, E: float) -> Tuple[float, float]:
    d = params.k2 - params.P
    s = math.sqrt(d * d + 4.0 * E)
    if d >= 0.0:
        lambda1 = 4.0 * E / (params.k2 * (s + d))
        lambda2 = (s + d) / params.k2
    else:
        lambda1 = (s - d) / params.k2
        lambda2 = 4.0 * E / (params.k2 * (s - d))
    return lambda1, lambda2


def _well_turning_points(params: ModeParams, E: float) -> Tuple[float, float, float]:
    depth = params.P - params.k2
    s = math.sqrt(max(4.0 * (E - params.bottom_energy), 0.0))
    phi1 = (depth + s) / params.k2
    phi2 = -4.0 * E / (params.k2 * (depth + s))
    return phi1, phi2, s


def limit_period(params: ModeParams) -> float:
    """Period of the linearized motion: the E -> 0+ limit, or the bottom-of-well limit."""
    k, d = params.k, params.k2 - params.P
    if d > 0.0:
        return 2.0 * math.pi / (k * math.sqrt(d))
    if d < 0.0:
        return math.pi * math.sqrt(2.0) / (k * math.sqrt(-d))
    return math.inf


def large_energy_period(params: ModeParams, E: float) -> float:
    if E <= 0.0:
        raise DomainError("the large-energy law needs E > 0")
    return 4.0 * sigma_constant() / (params.k * E**0.25)


@lru_cache(maxsize=None)
def _gauss_legendre(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def well_quadrature(delta: float) -> float:
    """∫_δ^1 dθ / sqrt((1 - θ²)(θ² - δ²)) by Gauss-Legendre.

    With θ² = δ² + (1 - δ²) sin²φ the integrand becomes
    1 / sqrt(δ² cos²φ + sin²φ) on (0, π/2). Its peak at φ = 0 has width δ, so
    the rule stops converging below δ ~ 1e-4; periods use the closed form
    K with complementary modulus δ and this serves as a cross-check.
    """
    settings = get_settings()
    half = math.pi / 4.0
    d2 = delta * delta
    nodes = settings.quadrature_nodes
    previous = None
    while nodes <= settings.quadrature_max_nodes:
        x, w = _gauss_legendre(nodes)
        phi = half * (x + 1.0)
        value = half * float(np.sum(w / np.sqrt(d2 * np.cos(phi) ** 2 + np.sin(phi) ** 2)))
        if previous is not None and abs(value - previous) <= settings.quadrature_rel_tol * abs(value):
            return value
        previous = value
        nodes *= 2
    raise NumericalQualityError(f"well period quadrature did not converge for delta={delta!r}")


def _positive_period(params: ModeParams, E: float) -> float:
    d = params.k2 - params.P
    x_m = 4.0 * E + d * d
    root = math.sqrt(x_m)
    # squared complementary modulus 1/2 + d/(2 sqrt X), written without cancellation
    if d >= 0.0:
        kc2 = (root + d) / (2.0 * root)
    else:
        kc2 = 2.0 * E / (root * (root - d))
    return 4.0 / (params.k * x_m**0.25) * elliptic_k_complement(math.sqrt(kc2))


def _well_period(params: ModeParams, E: float) -> float:
    phi1, phi2, s = _well_turning_points(params, E)
    delta = min(math.sqrt(phi2 / phi1), 1.0)
    depth = params.P - params.k2
    return 2.0 * math.sqrt(2.0) / (params.k * math.sqrt(depth + s)) * elliptic_k_complement(delta)


def period_of(params: ModeParams, E: float) -> float:
    regime = _orbit_regime(params, E)
    if regime is EnergyRegime.positive_energy:
        return _positive_period(params, E)
    if regime is EnergyRegime.bottom_of_well:
        return limit_period(params)
    return _well_period(params, E)


def orbit_from_energy(params: ModeParams, E: float, sign: int = 1) -> DuffingOrbit:
    """Periodic orbit at energy ``E`` released at rest from its canonical turning point.

    The canonical start is Θ(0) = sqrt(Λ1) for E > 0 and Θ(0) = sqrt(Φ2), the
    inner turning point of the positive well, for E < 0. ``sign=-1`` gives the
    mirror orbit -Θ.
    """
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    regime = _orbit_regime(params, E)
    level = EnergyLevel(E=E, regime=regime)

    if regime is EnergyRegime.positive_energy:
        lambda1, lambda2 = _positive_turning_points(params, E)
        amplitude = math.sqrt(lambda1)
        return DuffingOrbit(
            params=params,
            energy=level,
            lambda1=lambda1,
            lambda2=lambda2,
            amplitude=amplitude,
            period=_positive_period(params, E),
            canonical_initial=(sign * amplitude, 0.0),
            sign=sign,
        )

    if regime is EnergyRegime.bottom_of_well:
        phi = (params.P - params.k2) / params.k2
        level = EnergyLevel(E=params.bottom_energy, regime=regime)
        return DuffingOrbit(
            params=params,
            energy=level,
            phi1=phi,
            phi2=phi,
            delta=1.0,
            amplitude=math.sqrt(phi),
            period=limit_period(params),
            canonical_initial=(sign * math.sqrt(phi), 0.0),
            sign=sign,
        )

    phi1, phi2, _ = _well_turning_points(params, E)
    return DuffingOrbit(
        params=params,
        energy=level,
        phi1=phi1,
        phi2=phi2,
        delta=math.sqrt(phi2 / phi1),
        amplitude=math.sqrt(phi1),
        period=_well_period(params, E),
        canonical_initial=(sign * math.sqrt(phi2), 0.0),
        sign=sign,
    )


def amplitude_sup_squared(params: ModeParams, E: float) -> float:
    """‖Θ‖∞² at energy E: Λ1 above zero energy, Φ1 inside the well."""
    regime = _orbit_regime(params, E)
    if regime is EnergyRegime.positive_energy:
        return _positive_turning_points(params, E)[0]
    if regime is EnergyRegime.bottom_of_well:
        return (params.P - params.k2) / params.k2
    return _well_turning_points(params, E)[0]


def orbit_trajectory(orbit: DuffingOrbit, n_periods: float, config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the orbit from its canonical start over ``n_periods`` periods.

    Raises NumericalQualityError when the energy drifts by more than the
    configured relative tolerance or the state fails to return after one period.
    """
    if not n_periods > 0.0:
        raise DomainError(f"n_periods must be positive, got {n_periods!r}")
    settings = get_settings()
    params = orbit.params
    field = duffing_field(params)
    initial = np.asarray(orbit.canonical_initial, dtype=float)
    t_end = n_periods * orbit.period

    def run(config: IntegratorConfig) -> Trajectory:
        trajectory = integrate(field, initial, (0.0, t_end), config)
        energies = energy_along(params, trajectory.component(0), trajectory.component(1))
        drift = float(np.max(np.abs(energies - orbit.E))) / abs(orbit.E)
        if drift > settings.energy_drift_tol:
            raise NumericalQualityError(f"energy drift {drift:.3e} exceeds {settings.energy_drift_tol:.1e}")
        if n_periods >= 1.0:
            gap = float(np.linalg.norm(trajectory.at(orbit.period) - initial))
            if gap >= 1e-6 * (1.0 + float(np.linalg.norm(initial))):
                raise NumericalQualityError(f"orbit does not close after one period (gap {gap:.3e})")
        return trajectory

    return with_tightening(run, resolve_config(config))


def homoclinic(params: ModeParams, t):
    """The zero-energy loop sqrt(2(P - k²)) / (k cosh(k sqrt(P - k²) t)); scalar or array ``t``."""
    if not params.supercritical:
        raise DomainError(f"the homoclinic orbit needs k^2 < P (k={params.k}, P={params.P})")
    depth = params.P - params.k2
    rate = params.k * math.sqrt(depth)
    scale = math.sqrt(2.0 * depth) / params.k
    decay = np.exp(-np.abs(rate * np.asarray(t, dtype=float)))
    value = scale * 2.0 * decay / (1.0 + decay * decay)
    return float(value) if np.ndim(value) == 0 else value


def half_period_moments(orbit: DuffingOrbit, config: IntegratorConfig | None = None) -> Tuple[float, float]:
    """(∫Θ², ∫Θ⁴) over [0, T/2], accumulated alongside the orbit."""
    params = orbit.params
    linear = params.linear_coefficient
    cubic = float(params.k2 * params.k2)

    def field(_t: float, y: np.ndarray) -> np.ndarray:
        theta2 = y[0] * y[0]
        return np.array([y[1], -linear * y[0] - cubic * theta2 * y[0], theta2, theta2 * theta2])

    initial = [orbit.canonical_initial[0], orbit.canonical_initial[1], 0.0, 0.0]
    final = integrate(field, initial, (0.0, orbit.period / 2.0), resolve_config(config), dense=False).final_state
    return float(final[2]), float(final[3])


def hill_integral_I(m: int, n: int, P: float, E: float, config: IntegratorConfig | None = None) -> float:
    """I(E) = ∫_0^{T/2} (n²(n² - P) + m²n²Θ_m²)² dt along the mode-m orbit at energy E."""
    orbit = orbit_from_energy(ModeParams(k=m, P=P), E)
    theta2_integral, theta4_integral = half_period_moments(orbit, config)
    base = n * n * (n * n - P)
    coupling = float(m * m * n * n)
    return (
        base * base * orbit.period / 2.0
        + 2.0 * base * coupling * theta2_integral
        + coupling * coupling * theta4_integral
    )


def scaled_energy_functions(params: ModeParams, E: float) -> ScaledEnergyFunctions:
    if not E > 0.0:
        raise DomainError(f"scaled energy functions need E > 0, got {E!r}")
    d = params.k2 - params.P
    if d == 0.0:
        raise DomainError("scaled energy functions are undefined at P = m^2")
    x_m = 4.0 * E + d * d
    y_m = x_m / (d * d)
    return ScaledEnergyFunctions(x_m=x_m, y_m=y_m, z_m=0.5 - 0.5 / math.sqrt(y_m))


def l2_upper_bound(params: ModeParams, E: float) -> float:
    """Upper bound (T/3)(sqrt(X) - m² + P)/m² for ∫_0^{T/2} Θ²."""
    if not E > 0.0:
        raise DomainError("the L2 bound is stated for E > 0")
    x_m = 4.0 * E + (params.k2 - params.P) ** 2
    return period_of(params, E) / 3.0 * (math.sqrt(x_m) - params.k2 + params.P) / params.k2
