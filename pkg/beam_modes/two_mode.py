"""Two interacting modes w = Θ_m and z = Θ_n.

    w'' + m²(m² - P) w + m²(m² w² + n² z²) w = 0
    z'' + n²(n² - P) z + n²(n² z² + m² w²) z = 0

The flow conserves E_w + E_z + E_wz; a small mode that suddenly captures
energy from the large one is the dynamical face of linear instability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import Field, model_validator

from .config import IntegratorConfig, get_settings, resolve_config
from .duffing import orbit_from_energy
from .errors import DomainError, NumericalQualityError
from .export import Destination, write_rows
from .integrate import Trajectory, integrate
from .logger import get_logger
from .quality import with_tightening
from .schemas import FrozenModel, ModeParams, TransferReport, TransferVerdict

logger = get_logger(__name__)

DEFAULT_SEED_RATIO = 1e-4
TRAJECTORY_COLUMNS = ("t", "w", "w_dot", "z", "z_dot", "E_w", "E_z", "E_wz")


def channel_energies(m: int, n: int, P: float, w, w_dot, z, z_dot) -> Tuple[Any, Any, Any]:
    """(E_w, E_z, E_wz) for scalars or arrays."""
    m2, n2 = m * m, n * n
    w2, z2 = np.square(w), np.square(z)
    e_w = 0.5 * np.square(w_dot) + 0.5 * m2 * (m2 - P) * w2 + 0.25 * m2 * m2 * w2 * w2
    e_z = 0.5 * np.square(z_dot) + 0.5 * n2 * (n2 - P) * z2 + 0.25 * n2 * n2 * z2 * z2
    e_wz = 0.5 * m2 * n2 * w2 * z2
    return e_w, e_z, e_wz


class TwoModeConfig(FrozenModel):
    m: int = Field(..., ge=1)
    n: int = Field(..., ge=1)
    P: float = Field(..., allow_inf_nan=False)
    w0: float = Field(..., allow_inf_nan=False)
    w1: float = Field(..., allow_inf_nan=False)
    z0: float = Field(..., allow_inf_nan=False)
    z1: float = Field(..., allow_inf_nan=False)

    @model_validator(mode="after")
    def _distinct_modes(self) -> "TwoModeConfig":
        if self.m == self.n:
            raise ValueError("the two modes must differ (m != n)")
        return self

    @property
    def initial_state(self) -> np.ndarray:
        return np.array([self.w0, self.w1, self.z0, self.z1], dtype=float)

    @property
    def total_energy(self) -> float:
        return float(sum(channel_energies(self.m, self.n, self.P, self.w0, self.w1, self.z0, self.z1)))

    def swapped(self) -> "TwoModeConfig":
        return TwoModeConfig(m=self.n, n=self.m, P=self.P, w0=self.z0, w1=self.z1, z0=self.w0, z1=self.w1)

    @classmethod
    def from_energies(cls, m: int, n: int, P: float, E_w: float, E_z: float) -> "TwoModeConfig":
        """Large mode at rest on its canonical turning point, small mode kicked from the origin.

        With z(0) = 0 the coupling energy vanishes at t = 0, so the channels
        start exactly at E_w and E_z.
        """
        if E_z < 0.0:
            raise DomainError(f"a kick from the origin carries E_z >= 0, got {E_z!r}")
        w0, w1 = orbit_from_energy(ModeParams(k=m, P=P), E_w).canonical_initial
        return cls(m=m, n=n, P=P, w0=w0, w1=w1, z0=0.0, z1=math.sqrt(2.0 * E_z))

    @classmethod
    def seeded(cls, m: int, n: int, P: float, E_w: float, seed_ratio: float = DEFAULT_SEED_RATIO) -> "TwoModeConfig":
        """Small mode displaced by ``seed_ratio`` times the large mode's amplitude, at rest."""
        orbit = orbit_from_energy(ModeParams(k=m, P=P), E_w)
        w0, w1 = orbit.canonical_initial
        return cls(m=m, n=n, P=P, w0=w0, w1=w1, z0=seed_ratio * orbit.amplitude, z1=0.0)


@dataclass(frozen=True, eq=False)
class EnergyChannels:
    """E_w, E_z and E_wz sampled at the integrator output times."""

    times: np.ndarray
    E_w: np.ndarray
    E_z: np.ndarray
    E_wz: np.ndarray
    E_total: float

    def __post_init__(self) -> None:
        for array in (self.times, self.E_w, self.E_z, self.E_wz):
            array.setflags(write=False)

    @property
    def total(self) -> np.ndarray:
        return self.E_w + self.E_z + self.E_wz

    @property
    def relative_drift(self) -> float:
        scale = abs(self.E_total) if self.E_total != 0.0 else 1.0
        return float(np.max(np.abs(self.total - self.E_total))) / scale

    def to_dict(self) -> Dict[str, Any]:
        return {
            "samples": int(self.times.size),
            "t_end": float(self.times[-1]),
            "E_total": self.E_total,
            "relative_drift": self.relative_drift,
            "E_z_initial": float(self.E_z[0]),
            "E_z_max": float(np.max(self.E_z)),
        }


def _field(m: int, n: int, P: float):
    m2, n2 = float(m * m), float(n * n)
    linear_w, linear_z = m2 * (m2 - P), n2 * (n2 - P)

    def field(_t: float, y: np.ndarray) -> np.ndarray:
        w, w_dot, z, z_dot = y
        w2, z2 = w * w, z * z
        return np.array(
            [
                w_dot,
                -linear_w * w - m2 * (m2 * w2 + n2 * z2) * w,
                z_dot,
                -linear_z * z - n2 * (n2 * z2 + m2 * w2) * z,
            ]
        )

    return field


def channels_of(config: TwoModeConfig, trajectory: Trajectory) -> EnergyChannels:
    e_w, e_z, e_wz = channel_energies(
        config.m,
        config.n,
        config.P,
        trajectory.component(0),
        trajectory.component(1),
        trajectory.component(2),
        trajectory.component(3),
    )
    return EnergyChannels(
        times=np.array(trajectory.times),
        E_w=np.asarray(e_w, dtype=float),
        E_z=np.asarray(e_z, dtype=float),
        E_wz=np.asarray(e_wz, dtype=float),
        E_total=config.total_energy,
    )


def simulate(
    config: TwoModeConfig, t_end: float, integrator: IntegratorConfig | None = None
) -> Tuple[Trajectory, EnergyChannels]:
    """Integrate the coupled system on [0, t_end] and sample the energy channels.

    Raises:
        DomainError: if ``t_end`` is not positive.
        NumericalQualityError: if E_w + E_z + E_wz drifts beyond the configured
            tolerance even after tightening.
    """
    if not t_end > 0.0:
        raise DomainError(f"t_end must be positive, got {t_end!r}")
    settings = get_settings()
    field = _field(config.m, config.n, config.P)

    def run(integrator: IntegratorConfig) -> Tuple[Trajectory, EnergyChannels]:
        trajectory = integrate(field, config.initial_state, (0.0, t_end), integrator)
        channels = channels_of(config, trajectory)
        drift = channels.relative_drift
        if drift > settings.energy_drift_tol:
            raise NumericalQualityError(f"total energy drifted by {drift:.3e} (relative)")
        logger.debug("Two-mode run finished", extra={"steps": len(trajectory), "drift": drift})
        return trajectory, channels

    return with_tightening(run, resolve_config(integrator))


def transfer_report(channels: EnergyChannels, threshold: Optional[float] = None) -> TransferReport:
    """Largest growth of E_z relative to its starting value."""
    threshold = get_settings().transfer_threshold if threshold is None else threshold
    baseline = float(channels.E_z[0])
    if not baseline > 0.0:
        raise DomainError(f"transfer ratios need E_z(0) > 0, got {baseline!r}")
    ratios = channels.E_z / baseline
    peak = int(np.argmax(ratios))
    ratio = float(ratios[peak])
    verdict = TransferVerdict.transfer_observed if ratio > threshold else TransferVerdict.no_transfer
    return TransferReport(
        max_growth_ratio=ratio, time_of_peak=float(channels.times[peak]), verdict_hint=verdict, threshold=threshold
    )


def potential(m: int, n: int, P: float, w: float, z: float) -> float:
    m2, n2 = m * m, n * n
    w2, z2 = w * w, z * z
    return (
        0.5 * m2 * (m2 - P) * w2
        + 0.5 * n2 * (n2 - P) * z2
        + 0.25 * m2 * m2 * w2 * w2
        + 0.25 * n2 * n2 * z2 * z2
        + 0.5 * m2 * n2 * w2 * z2
    )


def potential_hessian(m: int, n: int, P: float, w: float, z: float) -> np.ndarray:
    m2, n2 = m * m, n * n
    ww = m2 * (m2 - P) + 3.0 * m2 * m2 * w * w + m2 * n2 * z * z
    zz = n2 * (n2 - P) + 3.0 * n2 * n2 * z * z + m2 * n2 * w * w
    wz = 2.0 * m2 * n2 * w * z
    return np.array([[ww, wz], [wz, zz]])


def growth_exponent(trajectory: Trajectory, t_window: float, period: Optional[float] = None) -> float:
    """Exponential growth rate of the small mode, ln|(z, z')| per unit time.

    With ``period`` the norm is sampled stroboscopically at t = k·period for
    k >= 1 inside the window, which removes the in-period oscillation;
    otherwise every output point up to ``t_window`` enters the fit.
    """
    if period is not None:
        count = int(math.floor(t_window / period + 1e-9))
        if count < 2:
            raise DomainError("the window must hold at least two periods")
        times = period * np.arange(1, count + 1, dtype=float)
        states = trajectory.at(times)
        z, z_dot = states[2], states[3]
    else:
        mask = trajectory.times <= t_window
        times = trajectory.times[mask]
        z, z_dot = trajectory.component(2)[mask], trajectory.component(3)[mask]
    log_norm = 0.5 * np.log(np.square(z) + np.square(z_dot))
    slope, _ = np.polyfit(times, log_norm, 1)
    return float(slope)


def write_trajectory_csv(trajectory: Trajectory, channels: EnergyChannels, destination: Destination) -> None:
    rows = (
        (float(t), *(float(value) for value in state), float(e_w), float(e_z), float(e_wz))
        for t, state, e_w, e_z, e_wz in zip(
            trajectory.times, trajectory.states, channels.E_w, channels.E_z, channels.E_wz
        )
    )
    write_rows(TRAJECTORY_COLUMNS, rows, destination)
