"""Complete elliptic integral K, the constant sigma and the comparison functions
behind the large-ratio stability certificate."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import List, NamedTuple

import numpy as np

from .errors import DomainError

_AGM_TOL = 1e-15
_AGM_MAX_ITER = 64


class ComparisonBounds(NamedTuple):
    f: float
    g: float
    h: float


def _agm(a: float, b: float) -> float:
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) < _AGM_TOL * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def elliptic_k_complement(kc: float) -> float:
    """K expressed through the complementary modulus ``kc = sqrt(1 - x^2)``.

    Near the logarithmic singularity ``kc`` is usually known to full relative
    precision while ``x`` is not, so callers close to x = 1 should use this form.
    """
    if not 0.0 < kc <= 1.0 or math.isnan(kc):
        raise DomainError(f"complementary modulus must lie in (0, 1], got {kc!r}")
    return math.pi / (2.0 * _agm(1.0, kc))


def elliptic_k(x: float) -> float:
    """Complete elliptic integral of the first kind by the arithmetic-geometric mean.

    Args:
        x: Modulus in [0, 1).

    Returns:
        K(x) = integral over (0, 1) of dt / sqrt((1 - t^2)(1 - x^2 t^2)).
    """
    if not 0.0 <= x < 1.0:
        raise DomainError(f"elliptic modulus must lie in [0, 1), got {x!r}")
    return elliptic_k_complement(math.sqrt((1.0 - x) * (1.0 + x)))


@lru_cache(maxsize=None)
def sigma_constant() -> float:
    """sigma = integral over (0, 1) of 1 / sqrt(1 - t^4) = K(1/sqrt 2) / sqrt 2 ~ 1.311."""
    return elliptic_k(1.0 / math.sqrt(2.0)) / math.sqrt(2.0)


def comparison_bounds(z: float, eps: float) -> ComparisonBounds:
    """Return (f(z), g(z), h_eps(z)).

    f(z) = K(sqrt z)^4, g is its convexity chord bound and h_eps is the larger of
    the two admissible bounds coming from the Zhukovskii and Li-Zhang criteria.
    """
    if not 0.0 < z < 0.5:
        raise DomainError(f"z must lie in the open interval (0, 1/2), got {z!r}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in the open interval (0, 1), got {eps!r}")

    sigma = sigma_constant()
    f = elliptic_k(math.sqrt(z)) ** 4
    g = (math.pi / 2.0 + (2.0 * math.sqrt(2.0) * sigma - math.pi) * z) ** 4

    e2 = eps * eps
    e4 = e2 * e2
    zhukovskii_branch = math.pi**4 / (16.0 * e4 * (e2 + 2.0 * (1.0 - e2) * z) ** 2)
    quadratic = (
        4.0 * (3.0 * e4 - 4.0 * e2 + 5.0 / 3.0) * z * z
        - 4.0 * (3.0 * e4 - 2.0 * e2 + 1.0 / 3.0) * z
        + 3.0 * e4
    )
    # a non-positive denominator makes the Li-Zhang branch vacuous
    li_zhang_branch = 4.0 * sigma**4 / (e4 * quadratic) if quadratic > 0.0 else -math.inf
    return ComparisonBounds(f=f, g=g, h=max(zhukovskii_branch, li_zhang_branch))


def comparison_grid(points: int = 1000) -> np.ndarray:
    """Uniform grid of the open interval (0, 1/2), endpoints excluded."""
    if points < 1:
        raise DomainError("comparison grid needs at least one point")
    return np.arange(1, points + 1, dtype=float) / (2.0 * (points + 1))


def comparison_failures(eps: float, points: int = 1000) -> List[float]:
    """Grid points where f(z) < h_eps(z) fails."""
    failures = []
    for z in comparison_grid(points):
        bounds = comparison_bounds(float(z), eps)
        if not bounds.f < bounds.h:
            failures.append(float(z))
    return failures


def comparison_holds(eps: float, points: int = 1000) -> bool:
    return not comparison_failures(eps, points)


def certified_ratio_bound(eps: float) -> float:
    """Smallest m/n covered by the certificate at ``eps``: n^2 <= eps^2 m^2."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    return 1.0 / eps
