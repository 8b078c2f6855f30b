from __future__ import annotations

import math
from enum import Enum
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import IntegratorConfig

Pair = Tuple[float, float]


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True)


# --- single-mode Duffing orbits -------------------------------------------------


class EnergyRegime(str, Enum):
    positive_energy = "positive_energy"
    negative_energy_well = "negative_energy_well"
    bottom_of_well = "bottom_of_well"
    homoclinic = "homoclinic"
    trivial = "trivial"


class ModeParams(FrozenModel):
    """Spatial frequency ``k`` of a Fourier mode under axial compression ``P``."""

    k: int = Field(..., ge=1)
    P: float = Field(..., allow_inf_nan=False)

    @property
    def k2(self) -> int:
        return self.k * self.k

    @property
    def linear_coefficient(self) -> float:
        return self.k2 * (self.k2 - self.P)

    @property
    def supercritical(self) -> bool:
        return self.k2 < self.P

    @property
    def bottom_energy(self) -> Optional[float]:
        if not self.supercritical:
            return None
        return -((self.P - self.k2) ** 2) / 4.0


class EnergyLevel(FrozenModel):
    E: float
    regime: EnergyRegime


class DuffingOrbit(FrozenModel):
    params: ModeParams
    energy: EnergyLevel
    lambda1: Optional[float] = None
    lambda2: Optional[float] = None
    phi1: Optional[float] = None
    phi2: Optional[float] = None
    delta: Optional[float] = None
    amplitude: float
    period: float
    canonical_initial: Pair
    sign: Literal[1, -1] = 1

    @property
    def E(self) -> float:
        return self.energy.E

    @property
    def sign_changing(self) -> bool:
        return self.energy.regime is EnergyRegime.positive_energy

    @property
    def theta_squared_bounds(self) -> Pair:
        """Range of Θ(t)² along the orbit, from the analytic turning points."""
        if self.sign_changing:
            return 0.0, self.lambda1
        return self.phi2, self.phi1

    def reflected(self) -> "DuffingOrbit":
        theta0, theta_dot0 = self.canonical_initial
        return self.model_copy(update={"sign": -self.sign, "canonical_initial": (-theta0, -theta_dot0)})


class ScaledEnergyFunctions(FrozenModel):
    x_m: float
    y_m: float
    z_m: float


# --- Hill equation and Floquet multipliers ------------------------------------------


class Verdict(str, Enum):
    stable = "stable"
    unstable = "unstable"
    marginal = "marginal"


class HillProblem(FrozenModel):
    """ξ'' + a(t) ξ = 0 with a(t) = n²(n² - P) + m²n² Θ_m(t)² along a mode-m orbit."""

    m: int = Field(..., ge=1)
    n: int = Field(..., ge=1)
    P: float
    orbit: DuffingOrbit
    coeff_period: float = Field(..., gt=0)

    @property
    def base(self) -> float:
        return self.n * self.n * (self.n * self.n - self.P)

    @property
    def coupling(self) -> float:
        return float(self.m * self.m * self.n * self.n)

    def coefficient(self, theta_squared: float) -> float:
        return self.base + self.coupling * theta_squared

    @property
    def coefficient_bounds(self) -> Pair:
        low, high = self.orbit.theta_squared_bounds
        return self.coefficient(low), self.coefficient(high)


class MonodromyResult(FrozenModel):
    matrix: Tuple[Pair, Pair]
    det: float
    trace: float
    discriminant: float
    multipliers: Tuple[Pair, Pair]
    verdict: Verdict
    period: float

    @property
    def complex_multipliers(self) -> Tuple[complex, complex]:
        (re1, im1), (re2, im2) = self.multipliers
        return complex(re1, im1), complex(re2, im2)

    @property
    def spectral_radius(self) -> float:
        return max(abs(value) for value in self.complex_multipliers)

    @property
    def trace_excess(self) -> float:
        """|trace| - 2, computed from the cancellation-free discriminant."""
        return self.discriminant / (abs(self.trace) + 2.0)


class ZhukovskiiReport(FrozenModel):
    applies: bool
    ell: Optional[int] = None


class LiZhangReport(FrozenModel):
    applies: bool
    lhs: float
    rhs: float


class NegativeCoefficientReport(FrozenModel):
    applies: bool


class CriterionReport(FrozenModel):
    zhukovskii: ZhukovskiiReport
    li_zhang: LiZhangReport
    negative_coeff: NegativeCoefficientReport

    @property
    def implies_stable(self) -> bool:
        return self.zhukovskii.applies or self.li_zhang.applies

    @property
    def implies_unstable(self) -> bool:
        return self.negative_coeff.applies


class StabilityReport(FrozenModel):
    m: int
    n: int
    P: float
    E: float
    verdict: Verdict
    criteria: CriterionReport
    monodromy: MonodromyResult


# --- two-mode energy exchange ---------------------------------------------------------


class TransferVerdict(str, Enum):
    transfer_observed = "transfer_observed"
    no_transfer = "no_transfer"


class TransferReport(FrozenModel):
    max_growth_ratio: float
    time_of_peak: float
    verdict_hint: TransferVerdict
    threshold: float


# --- regimes ------------------------------------------------------------------------------


class GammaMembership(str, Enum):
    in_iu = "in_iu"
    in_is = "in_is"
    boundary_lower = "boundary_lower"
    boundary_upper = "boundary_upper"


class FrequencyRatioClass(FrozenModel):
    m: int
    n: int
    gamma: float
    membership: GammaMembership
    k_index: int

    @property
    def is_boundary(self) -> bool:
        return self.membership in {GammaMembership.boundary_lower, GammaMembership.boundary_upper}


class ResonanceDiagnostics(FrozenModel):
    ell: Optional[int] = None
    mu: Optional[int] = None
    L: Optional[float] = None
    L_is_integer: Optional[bool] = None
    ppp2_value: Optional[float] = None


class Prediction(str, Enum):
    stable = "stable"
    unstable = "unstable"
    unknown = "unknown"
    boundary = "boundary"


class TableRow(str, Enum):
    p_le_n2_lt_m2 = "P<=n^2<m^2"
    n2_lt_p_le_m2 = "n^2<P<=m^2"
    n2_lt_m2_lt_p = "n^2<m^2<P"
    p_lt_m2_lt_n2 = "P<m^2<n^2"
    p_eq_m2_lt_n2 = "P=m^2<n^2"
    m2_lt_p_le_n2 = "m^2<P<=n^2"
    m2_lt_n2_lt_p = "m^2<n^2<P"


class RegimeReport(FrozenModel):
    m: int
    n: int
    P: float
    ordering: TableRow
    low_energy_prediction: Prediction
    high_energy_prediction: Prediction
    depends_on_gamma: bool
    gamma_class: FrequencyRatioClass
    conjecture_hint: Optional[Prediction] = None
    theorem_refs: List[str]
    resonance: ResonanceDiagnostics
    instability_energy_bound: Optional[float] = None


class Ppp2Hit(FrozenModel):
    m: int
    n: int
    L: int


# --- stationary beam positions ------------------------------------------------------------


class StationarySolution(FrozenModel):
    j: int = Field(..., ge=0)
    amplitude: float = Field(..., ge=0)
    energy_j0: float
    morse_index: int = Field(..., ge=0)
    sign: Literal[-1, 0, 1]

    def profile(self, x):
        """u(x) = sign · A · sin(jx); scalar or array."""
        return self.sign * self.amplitude * np.sin(self.j * np.asarray(x, dtype=float))


# --- atlas sweeps --------------------------------------------------------------------------


class VerdictSource(str, Enum):
    monodromy = "monodromy"
    cazenave_limit = "cazenave_limit"


def _strictly_increasing(values: List[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


class SweepSpec(FrozenModel):
    P: float = Field(..., allow_inf_nan=False)
    pairs: List[Tuple[int, int]] = Field(..., min_length=1)
    theta0_grid: Optional[List[float]] = None
    energy_grid: Optional[List[float]] = None
    verdict_source: VerdictSource = VerdictSource.monodromy
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig.from_settings)
    marginal_tol: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_grids(self) -> "SweepSpec":
        if (self.theta0_grid is None) == (self.energy_grid is None):
            raise ValueError("exactly one of theta0_grid or energy_grid is required")
        grid = self.grid
        if not grid:
            raise ValueError("sweep grid is empty")
        if not all(math.isfinite(value) for value in grid) or not _strictly_increasing(grid):
            raise ValueError("sweep grid must be finite and strictly increasing")
        for m, n in self.pairs:
            if m < 1 or n < 1 or m == n:
                raise ValueError(f"invalid mode pair ({m}, {n})")
        return self

    @property
    def grid(self) -> List[float]:
        return self.theta0_grid if self.theta0_grid is not None else self.energy_grid

    @property
    def by_amplitude(self) -> bool:
        return self.theta0_grid is not None


class AtlasCell(FrozenModel):
    gamma: float
    m: int
    n: int
    P: float
    theta0: Optional[float] = None
    E: Optional[float] = None
    trace: Optional[float] = None
    verdict: Optional[Verdict] = None
    quality: str = "ok"


class Threshold(FrozenModel):
    energy: float
    below: Verdict
    above: Verdict
