import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ellipk

from beam_modes.errors import DomainError
from beam_modes.special_functions import (
    certified_ratio_bound,
    comparison_bounds,
    comparison_failures,
    comparison_grid,
    comparison_holds,
    elliptic_k,
    elliptic_k_complement,
    sigma_constant,
)


def test_sigma_matches_published_value_and_quadrature():
    sigma = sigma_constant()
    assert round(sigma, 3) == 1.311
    # 1/sqrt(1 - t^4) = (1 - t)^(-1/2) / sqrt((1 + t)(1 + t^2))
    oracle, _ = quad(
        lambda t: 1.0 / math.sqrt((1.0 + t) * (1.0 + t * t)),
        0.0,
        1.0,
        weight="alg",
        wvar=(0.0, -0.5),
        epsabs=1e-14,
        epsrel=1e-14,
    )
    assert sigma == pytest.approx(oracle, rel=1e-10)


@pytest.mark.parametrize("x", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_elliptic_k_matches_reference(x):
    assert elliptic_k(x) == pytest.approx(float(ellipk(x * x)), rel=1e-10)


def test_elliptic_k_at_zero_and_monotone():
    assert elliptic_k(0.0) == pytest.approx(math.pi / 2.0, rel=1e-15)
    values = [elliptic_k(x) for x in np.linspace(0.0, 0.999, 200)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_complement_form_near_singularity():
    # K ~ ln(4/kc) as kc -> 0
    kc = 1e-9
    assert elliptic_k_complement(kc) == pytest.approx(math.log(4.0 / kc), rel=1e-6)


@pytest.mark.parametrize("x", [-0.1, 1.0, 1.5, math.nan])
def test_elliptic_k_rejects_out_of_range(x):
    with pytest.raises(DomainError):
        elliptic_k(x)


def test_chord_bound_dominates_f():
    for z in comparison_grid(500):
        bounds = comparison_bounds(float(z), 0.5)
        assert bounds.f <= bounds.g * (1.0 + 1e-12)


@pytest.mark.parametrize("z", [0.0, 0.5])
def test_comparison_bounds_rejects_closed_endpoints(z):
    with pytest.raises(DomainError):
        comparison_bounds(z, 0.5)


def test_comparison_grid_is_open_interval():
    grid = comparison_grid(1000)
    assert grid.size == 1000
    assert grid[0] > 0.0 and grid[-1] < 0.5


class TestCertificate:
    def test_holds_for_default_ratio(self):
        assert comparison_holds(21 / 22)

    def test_holds_for_sharper_ratio(self):
        assert comparison_holds(26 / 27)

    def test_fails_somewhere_beyond(self):
        assert comparison_failures(27 / 28)

    def test_ratio_bound(self):
        assert certified_ratio_bound(float(Fraction(21, 22))) == pytest.approx(22 / 21)
        assert certified_ratio_bound(26 / 27) == pytest.approx(1.03846, rel=1e-5)
        with pytest.raises(DomainError):
            certified_ratio_bound(1.0)
