from __future__ import annotations

import math
from functools import lru_cache
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

MIN_REL_TOL = 1e-13


class Settings(BaseSettings):
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    max_steps: int = 1_000_000
    method: Literal["DOP853", "RK45"] = "DOP853"

    marginal_tol: float = 1e-6
    det_tol: float = 1e-6
    energy_drift_tol: float = 1e-8
    classification_tol: float = 1e-13

    quadrature_nodes: int = 128
    quadrature_max_nodes: int = 8192
    quadrature_rel_tol: float = 1e-10

    quality_retries: int = 3
    transfer_threshold: float = 100.0
    threshold_refinement_tol: float = 1e-4
    threshold_samples: int = 64
    max_parallel_jobs: int | None = None

    log_level: str = "INFO"
    log_file: str | None = None

    model_config = SettingsConfigDict(
        env_prefix="BEAM_MODES_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )


@lru_cache
def get_settings() -> Settings:
    return Settings()


class IntegratorConfig(BaseModel):
    """Tolerances and budget for one adaptive integration."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(default=1e-10, gt=0)
    abs_tol: float = Field(default=1e-12, gt=0)
    max_step: float = Field(default=math.inf, gt=0)
    max_steps: int = Field(default=1_000_000, ge=1)
    method: Literal["DOP853", "RK45"] = "DOP853"

    @classmethod
    def from_settings(cls, settings: Settings | None = None) -> "IntegratorConfig":
        settings = settings or get_settings()
        return cls(
            rel_tol=settings.rel_tol,
            abs_tol=settings.abs_tol,
            max_step=settings.max_step,
            max_steps=settings.max_steps,
            method=settings.method,
        )

    @classmethod
    def with_tolerance(cls, tol: float) -> "IntegratorConfig":
        # --tol on the command line sets rel_tol; abs_tol follows two decades lower
        return cls.from_settings().model_copy(update={"rel_tol": tol, "abs_tol": tol * 1e-2})

    def tightened(self, factor: float = 100.0) -> "IntegratorConfig":
        # scipy clamps rel_tol below 100 machine epsilons
        return self.model_copy(
            update={"rel_tol": max(self.rel_tol / factor, MIN_REL_TOL), "abs_tol": self.abs_tol / factor}
        )


def resolve_config(config: IntegratorConfig | None) -> IntegratorConfig:
    return config if config is not None else IntegratorConfig.from_settings()
