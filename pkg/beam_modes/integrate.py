"""Adaptive embedded Runge-Kutta stepping with dense output and zero-crossing search.

The scipy solver classes are driven one step at a time so that the step budget
of :class:`IntegratorConfig` is enforced and failures report the time reached.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import DOP853, RK45, OdeSolution
from scipy.optimize import brentq

from .config import IntegratorConfig, resolve_config
from .errors import DomainError, IntegrationError
from .logger import get_logger

logger = get_logger(__name__)

VectorField = Callable[[float, np.ndarray], np.ndarray]
Direction = Literal[-1, 0, 1]

_SOLVERS = {"DOP853": DOP853, "RK45": RK45}
_CROSSING_XTOL = 1e-12
_SAMPLES_PER_STEP = 8


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dense: Optional[OdeSolution] = None

    def __post_init__(self) -> None:
        self.times.setflags(write=False)
        self.states.setflags(write=False)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def has_dense_output(self) -> bool:
        return self.dense is not None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def component(self, index: int) -> np.ndarray:
        return self.states[:, index]

    def at(self, t: float | np.ndarray) -> np.ndarray:
        if self.dense is None:
            raise DomainError("trajectory was integrated without dense output")
        lo, hi = self.times[0], self.times[-1]
        if np.any(np.asarray(t) < lo) or np.any(np.asarray(t) > hi):
            raise DomainError(f"t outside the integrated span [{lo!r}, {hi!r}]")
        return self.dense(t)


def _make_solver(system: VectorField, y0: np.ndarray, t0: float, t_bound: float, config: IntegratorConfig):
    solver_cls = _SOLVERS[config.method]
    return solver_cls(
        system,
        t0,
        y0,
        t_bound,
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=config.max_step,
        vectorized=False,
    )


def _advance(solver, steps: int, config: IntegratorConfig) -> None:
    if steps >= config.max_steps:
        raise IntegrationError("step budget exhausted", time=float(solver.t))
    message = solver.step()
    if solver.status == "failed":
        logger.warning("Integration failed", extra={"t": float(solver.t), "reason": message})
        raise IntegrationError(f"integration failed: {message}", time=float(solver.t))


def integrate(
    system: VectorField,
    initial_state: Sequence[float] | np.ndarray,
    t_span: Tuple[float, float],
    config: IntegratorConfig | None = None,
    *,
    dense: bool = True,
) -> Trajectory:
    """Integrate ``y' = system(t, y)`` over ``t_span``.

    Args:
        system: Vector field ``f(t, y)`` returning an array shaped like ``y``.
        initial_state: State at ``t_span[0]``.
        t_span: ``(t0, t1)`` with ``t0 < t1``.
        config: Tolerances and step budget; defaults to the settings.
        dense: Keep the per-step interpolants for evaluation between steps.

    Returns:
        The accepted steps as a :class:`Trajectory`.

    Raises:
        DomainError: if the span is empty or reversed.
        IntegrationError: on step budget exhaustion or step-size underflow.
    """
    config = resolve_config(config)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise DomainError(f"t_span must be increasing, got ({t0!r}, {t1!r})")
    y0 = np.array(initial_state, dtype=float)

    solver = _make_solver(system, y0, t0, t1, config)
    times = [t0]
    states = [y0.copy()]
    interpolants = []
    steps = 0
    while solver.status == "running":
        _advance(solver, steps, config)
        steps += 1
        times.append(float(solver.t))
        states.append(np.array(solver.y, dtype=float))
        if dense:
            interpolants.append(solver.dense_output())

    logger.debug("Integration finished", extra={"steps": steps, "t_end": t1})
    time_array = np.asarray(times)
    return Trajectory(
        times=time_array,
        states=np.vstack(states),
        dense=OdeSolution(time_array, interpolants) if dense else None,
    )


def find_zero_crossing(
    system: VectorField,
    initial_state: Sequence[float] | np.ndarray,
    component: int,
    direction: Direction = 0,
    t_start: float = 0.0,
    config: IntegratorConfig | None = None,
    horizon: float = 1e4,
) -> float:
    """First time after ``t_start`` at which ``y[component]`` changes sign.

    ``direction`` is +1 for an upward crossing, -1 for a downward one and 0 for
    either. A zero exactly at ``t_start`` is not a crossing. If the first
    crossing runs opposite to the requested direction the call fails rather
    than searching further.
    """
    config = resolve_config(config)
    if direction not in (-1, 0, 1):
        raise DomainError(f"direction must be -1, 0 or 1, got {direction!r}")
    y0 = np.array(initial_state, dtype=float)
    if not 0 <= component < y0.size:
        raise DomainError(f"component {component} outside a state of size {y0.size}")

    solver = _make_solver(system, y0, t_start, t_start + horizon, config)
    prev_t, prev_v = float(t_start), float(y0[component])
    steps = 0
    while solver.status == "running":
        _advance(solver, steps, config)
        steps += 1
        interpolant = solver.dense_output()
        for t in np.linspace(interpolant.t_old, interpolant.t, _SAMPLES_PER_STEP + 1)[1:]:
            value = float(interpolant(t)[component])
            if prev_v == 0.0:
                prev_t, prev_v = float(t), value
                continue
            if value == 0.0 or (value > 0.0) != (prev_v > 0.0):
                crossing = 1 if prev_v < 0.0 else -1
                if direction and crossing != direction:
                    raise DomainError(
                        f"first crossing of component {component} is {'upward' if crossing > 0 else 'downward'}, "
                        f"not the requested direction"
                    )
                if value == 0.0:
                    return float(t)
                return float(brentq(lambda s: interpolant(s)[component], prev_t, float(t), xtol=_CROSSING_XTOL))
            prev_t, prev_v = float(t), value

    raise IntegrationError(f"no crossing of component {component} within the horizon", time=float(solver.t))
