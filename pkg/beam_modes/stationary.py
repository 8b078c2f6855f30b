"""Equilibrium positions of the compressed beam.

The stationary equation u'''' + [P - (2/π)‖u'‖²] u'' = 0 on (0, π) with
hinged ends has u0 = 0 and, for every j with j² < P, the pair
±u_j = ±(sqrt(P - j²)/j) sin(jx).
"""

from __future__ import annotations

import math
from typing import List

import numpy as np

from .errors import DomainError
from .schemas import StationarySolution


def _buckled_count(P: float) -> int:
    """Largest k with k² < P, or 0."""
    if not P > 1.0:
        return 0
    k = math.isqrt(math.ceil(P) - 1)
    while k * k >= P:
        k -= 1
    while (k + 1) * (k + 1) < P:
        k += 1
    return k


def count_for(P: float) -> int:
    """Number of stationary solutions: 2k + 1 for P in (k², (k+1)²]."""
    return 2 * _buckled_count(P) + 1


def stationary_catalog(P: float) -> List[StationarySolution]:
    """u0, then +u_j and -u_j for j = 1..k, with energies and Morse indices."""
    if not math.isfinite(P):
        raise DomainError(f"P must be finite, got {P!r}")
    k = _buckled_count(P)
    catalog = [StationarySolution(j=0, amplitude=0.0, energy_j0=0.0, morse_index=k, sign=0)]
    for j in range(1, k + 1):
        excess = P - j * j
        amplitude = math.sqrt(excess) / j
        energy = -math.pi / 8.0 * excess * excess
        for sign in (1, -1):
            catalog.append(
                StationarySolution(j=j, amplitude=amplitude, energy_j0=energy, morse_index=j - 1, sign=sign)
            )
    return catalog


def dirichlet_energy(solution: StationarySolution) -> float:
    """‖u'‖² over (0, π) in closed form, (π/2) A² j²."""
    return math.pi / 2.0 * (solution.amplitude * solution.j) ** 2


def residual_check(solution: StationarySolution, P: float, x_samples) -> float:
    """Largest |u'''' + (P - (2/π)‖u'‖²) u''| over ``x_samples``."""
    if solution.j == 0:
        return 0.0
    j = solution.j
    x = np.asarray(x_samples, dtype=float)
    load = P - 2.0 / math.pi * dirichlet_energy(solution)
    u = solution.profile(x)
    # u'''' = j⁴ u and u'' = -j² u for a single sine
    residual = j**4 * u - load * j * j * u
    return float(np.max(np.abs(residual))) if residual.size else 0.0
