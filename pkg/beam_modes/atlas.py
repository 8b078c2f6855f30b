"""Parameter sweeps over mode pairs and amplitudes or energies."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import IO, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import IntegratorConfig, get_settings, resolve_config
from .duffing import classify_energy, energy_from_amplitude
from .errors import BeamModesError, DomainError
from .export import Destination, parse_optional_float, write_rows
from .hill_floquet import build_hill, build_hill_from_amplitude, classify_problem
from .logger import get_logger
from .pool import ordered_map, resolve_jobs
from .regime import cazenave_limit_classify
from .schemas import AtlasCell, ModeParams, SweepSpec, Threshold, Verdict, VerdictSource

logger = get_logger(__name__)

ATLAS_COLUMNS = ("gamma", "m", "n", "P", "theta0", "E", "trace", "verdict", "quality")
DEFAULT_THETA0_MAX = 50.0
DEFAULT_GRID_POINTS = 200
_MAX_BISECTIONS = 200

CellTask = Tuple[SweepSpec, int, int, float]


def theta0_grid(hi: float = DEFAULT_THETA0_MAX, points: int = DEFAULT_GRID_POINTS, lo: float = 0.0) -> List[float]:
    """``points`` equally spaced amplitudes in (lo, hi]."""
    if points < 1 or not hi > lo:
        raise DomainError(f"theta0 grid needs points >= 1 and hi > lo, got ({lo!r}, {hi!r}, {points})")
    step = (hi - lo) / points
    return [lo + step * index for index in range(1, points + 1)]


def energy_grid(lo: float, hi: float, points: int = DEFAULT_GRID_POINTS, geometric: bool = False) -> List[float]:
    if points < 2 or not hi > lo:
        raise DomainError(f"energy grid needs points >= 2 and hi > lo, got ({lo!r}, {hi!r}, {points})")
    if geometric:
        if not lo > 0.0:
            raise DomainError("a geometric energy grid needs lo > 0")
        return [float(value) for value in np.geomspace(lo, hi, points)]
    return [float(value) for value in np.linspace(lo, hi, points)]


def _evaluate_cell(task: CellTask) -> AtlasCell:
    spec, m, n, value = task
    base = {"gamma": n * n / (m * m), "m": m, "n": n, "P": spec.P}
    theta0: Optional[float] = None
    E: Optional[float] = None
    try:
        if spec.by_amplitude:
            theta0 = value
            E = energy_from_amplitude(ModeParams(k=m, P=spec.P), value).E
        else:
            E = value

        if spec.verdict_source is VerdictSource.cazenave_limit:
            result = cazenave_limit_classify(base["gamma"], config=spec.integrator, marginal_tol=spec.marginal_tol)
            return AtlasCell(**base, theta0=theta0, E=E, trace=result.trace, verdict=result.verdict)

        if spec.by_amplitude:
            problem = build_hill_from_amplitude(m, n, spec.P, value)
        else:
            problem = build_hill(m, n, spec.P, value)
            theta0 = problem.orbit.canonical_initial[0]
        report = classify_problem(problem, spec.integrator, spec.marginal_tol)
        return AtlasCell(**base, theta0=theta0, E=E, trace=report.monodromy.trace, verdict=report.verdict)
    except BeamModesError as exc:
        logger.warning("Sweep cell failed", extra={**base, "value": value, "error": str(exc)})
        return AtlasCell(**base, theta0=theta0, E=E, quality=type(exc).__name__)


class SweepEngine:
    def __init__(self, jobs: Optional[int] = None) -> None:
        self._settings = get_settings()
        self._jobs = resolve_jobs(jobs)

    @property
    def jobs(self) -> int:
        return self._jobs

    def tasks(self, spec: SweepSpec) -> List[CellTask]:
        # row-major: pairs outer, grid inner
        return [(spec, m, n, value) for m, n in spec.pairs for value in spec.grid]

    def run(self, spec: SweepSpec) -> List[AtlasCell]:
        tasks = self.tasks(spec)
        logger.info("Sweep started", extra={"cells": len(tasks), "jobs": self._jobs, "P": spec.P})
        cells = ordered_map(_evaluate_cell, tasks, self._jobs)
        failed = sum(1 for cell in cells if cell.quality != "ok")
        logger.info("Sweep finished", extra={"cells": len(cells), "failed": failed})
        return cells


def sweep(spec: SweepSpec, jobs: Optional[int] = None) -> List[AtlasCell]:
    """One cell per (pair, grid value), in row-major order for any worker count."""
    return SweepEngine(jobs).run(spec)


def boundary_probe(
    m: int,
    n: int,
    P: float,
    energies: Sequence[float],
    integrator: IntegratorConfig | None = None,
    jobs: Optional[int] = None,
) -> List[AtlasCell]:
    """Monodromy verdicts at increasing energies, for γ at an endpoint of I_U and I_S."""
    spec = SweepSpec(P=P, pairs=[(m, n)], energy_grid=list(energies), integrator=resolve_config(integrator))
    return sweep(spec, jobs)


def unstable_runs(cells: Iterable[AtlasCell]) -> Dict[Tuple[int, int], List[Tuple[float, float]]]:
    """Maximal runs of consecutive Unstable cells per (m, n), as (first, last) grid values."""
    runs: Dict[Tuple[int, int], List[Tuple[float, float]]] = {}
    current: Dict[Tuple[int, int], Optional[List[float]]] = {}
    for cell in cells:
        key = (cell.m, cell.n)
        runs.setdefault(key, [])
        value = cell.theta0 if cell.theta0 is not None else cell.E
        if cell.verdict is Verdict.unstable:
            if current.get(key) is None:
                current[key] = [value, value]
            else:
                current[key][1] = value
        elif current.get(key) is not None:
            runs[key].append(tuple(current[key]))
            current[key] = None
    for key, span in current.items():
        if span is not None:
            runs[key].append(tuple(span))
    return runs


# --- energy thresholds ------------------------------------------------------------------------


def _verdict_at(
    m: int, n: int, P: float, E: float, config: IntegratorConfig, marginal_tol: Optional[float]
) -> Optional[Verdict]:
    try:
        return classify_problem(build_hill(m, n, P, E), config, marginal_tol).verdict
    except DomainError:
        # the homoclinic level carries no periodic orbit
        return None


def _bisect(
    m: int,
    n: int,
    P: float,
    bracket: Tuple[float, float],
    below: Verdict,
    refinement_tol: float,
    config: IntegratorConfig,
    marginal_tol: Optional[float],
) -> float:
    lo, hi = bracket
    for _ in range(_MAX_BISECTIONS):
        if hi - lo <= refinement_tol * max(abs(lo), abs(hi)):
            break
        middle = 0.5 * (lo + hi)
        verdict = _verdict_at(m, n, P, middle, config, marginal_tol)
        if verdict is Verdict.marginal:
            return middle
        if verdict is below or verdict is None:
            lo = middle
        else:
            hi = middle
    return 0.5 * (lo + hi)


def find_thresholds(
    m: int,
    n: int,
    P: float,
    E_range: Tuple[float, float],
    refinement_tol: Optional[float] = None,
    samples: Optional[int] = None,
    config: IntegratorConfig | None = None,
    marginal_tol: Optional[float] = None,
) -> List[Threshold]:
    """Energies where the monodromy verdict flips between Stable and Unstable.

    The range is sampled (geometrically when it spans more than two decades of
    positive energies) and each flip is bisected to ``refinement_tol``
    relative. A Marginal sample is itself reported as a transition.
    """
    settings = get_settings()
    refinement_tol = settings.threshold_refinement_tol if refinement_tol is None else refinement_tol
    samples = settings.threshold_samples if samples is None else samples
    config = resolve_config(config)
    lo, hi = float(E_range[0]), float(E_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError(f"energy range must be finite, got {E_range!r}")
    if not hi > lo:
        return []
    params = ModeParams(k=m, P=P)
    classify_energy(params, lo)
    classify_energy(params, hi)

    grid = energy_grid(lo, hi, max(samples, 2), geometric=lo > 0.0 and hi / lo > 100.0)
    sampled = [(E, _verdict_at(m, n, P, E, config, marginal_tol)) for E in grid]
    sampled = [(E, verdict) for E, verdict in sampled if verdict is not None]

    thresholds: List[Threshold] = []
    for index, (E, verdict) in enumerate(sampled):
        if verdict is Verdict.marginal:
            below = sampled[index - 1][1] if index > 0 else Verdict.marginal
            above = sampled[index + 1][1] if index + 1 < len(sampled) else Verdict.marginal
            if below is not Verdict.marginal or above is not Verdict.marginal:
                thresholds.append(Threshold(energy=E, below=below, above=above))
            continue
        if index + 1 == len(sampled):
            break
        next_E, next_verdict = sampled[index + 1]
        if next_verdict is Verdict.marginal or next_verdict is verdict:
            continue
        energy = _bisect(m, n, P, (E, next_E), verdict, refinement_tol, config, marginal_tol)
        thresholds.append(Threshold(energy=energy, below=verdict, above=next_verdict))

    logger.info("Thresholds located", extra={"m": m, "n": n, "P": P, "count": len(thresholds)})
    return thresholds


# --- CSV -----------------------------------------------------------------------------------------


def _cell_row(cell: AtlasCell) -> Tuple:
    return (cell.gamma, cell.m, cell.n, cell.P, cell.theta0, cell.E, cell.trace, cell.verdict, cell.quality)


def write_atlas_csv(cells: Iterable[AtlasCell], destination: Destination) -> None:
    write_rows(ATLAS_COLUMNS, (_cell_row(cell) for cell in cells), destination)


def read_atlas_csv(source: Union[str, Path, IO[str]]) -> List[AtlasCell]:
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as handle:
            return read_atlas_csv(handle)
    reader = csv.DictReader(source)
    if tuple(reader.fieldnames or ()) != ATLAS_COLUMNS:
        raise DomainError(f"unexpected atlas header {reader.fieldnames!r}")
    return [
        AtlasCell(
            gamma=float(row["gamma"]),
            m=int(row["m"]),
            n=int(row["n"]),
            P=float(row["P"]),
            theta0=parse_optional_float(row["theta0"]),
            E=parse_optional_float(row["E"]),
            trace=parse_optional_float(row["trace"]),
            verdict=Verdict(row["verdict"]) if row["verdict"] else None,
            quality=row["quality"],
        )
        for row in reader
    ]
