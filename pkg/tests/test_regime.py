import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beam_modes.errors import DomainError
from beam_modes.hill_floquet import build_hill, classify_stability, monodromy
from beam_modes.regime import (
    DEFAULT_CERTIFICATE_EPS,
    cazenave_limit_classify,
    classify_gamma,
    first_zero_theta,
    ppp2_scan,
    ppp2_value,
    resonance_diagnostics,
    small_mode_certificate,
    table_regime,
)
from beam_modes.schemas import GammaMembership, ModeParams, Prediction, RegimeReport, TableRow, Verdict
from beam_modes.special_functions import sigma_constant


def gamma_oracle(gamma: Fraction):
    """Membership of a rational γ by walking the interval endpoints in exact arithmetic."""
    k = 0
    while True:
        middle, high = (k + 1) * (2 * k + 1), (k + 1) * (2 * k + 3)
        if gamma < middle:
            return GammaMembership.in_is, k
        if gamma == middle:
            return GammaMembership.boundary_lower, k
        if gamma < high:
            return GammaMembership.in_iu, k
        if gamma == high:
            return GammaMembership.boundary_upper, k
        k += 1


def _near_endpoint(gamma: float, margin: float = 0.1) -> bool:
    # the interval endpoints are exactly the triangular numbers j(j+1)/2
    j = int((math.sqrt(8.0 * gamma + 1.0) - 1.0) / 2.0)
    return any(abs(gamma - i * (i + 1) / 2) < margin for i in (j, j + 1) if i > 0)


class TestClassifyGamma:
    def test_first_stability_interval(self):
        result = classify_gamma(1, 2)
        assert result.gamma == 4.0
        assert result.membership is GammaMembership.in_is
        assert result.k_index == 1

    def test_first_instability_interval(self):
        result = classify_gamma(2, 3)
        assert result.membership is GammaMembership.in_iu
        assert result.k_index == 0

    def test_endpoint(self):
        result = classify_gamma(1, 6)
        assert result.membership is GammaMembership.boundary_upper
        assert result.k_index == 3
        assert result.is_boundary

    def test_below_one(self):
        assert classify_gamma(2, 1).membership is GammaMembership.in_is
        assert classify_gamma(2, 1).k_index == 0

    @given(st.integers(min_value=1, max_value=200), st.integers(min_value=1, max_value=200))
    def test_matches_rational_oracle(self, m, n):
        result = classify_gamma(m, n)
        assert (result.membership, result.k_index) == gamma_oracle(Fraction(n * n, m * m))


class TestResonance:
    def test_integer_ell(self):
        diagnostics = resonance_diagnostics(1, 2, 3.0 / 7.0)
        assert diagnostics.ell == 5
        assert diagnostics.mu == 4
        assert diagnostics.L is None

    def test_mu_without_load(self):
        assert resonance_diagnostics(1, 2, 0.0).mu == 3

    def test_mu_off_resonance(self):
        diagnostics = resonance_diagnostics(1, 3, 0.5)
        ratio = 3.0 * math.sqrt(9.0 - 0.5) / math.sqrt(0.5)
        assert diagnostics.ell is None
        assert diagnostics.mu == math.floor(ratio)

    def test_integer_L_and_quartic(self):
        diagnostics = resonance_diagnostics(1, 2, 7.0)
        assert diagnostics.L == 2.0
        assert diagnostics.L_is_integer
        assert diagnostics.ppp2_value == -76.0
        assert diagnostics.mu is None

    def test_irrational_L(self):
        diagnostics = resonance_diagnostics(1, 2, 3.0)
        assert not diagnostics.L_is_integer
        assert diagnostics.L == pytest.approx(2.0 * math.sqrt(3.0))

    def test_quartic_is_exact_on_integers(self):
        assert ppp2_value(1, 2, 2) == 3 * 16 - 19 * 4 + 16 - 64
        assert isinstance(ppp2_value(7, 11, 3), int)


class TestQuarticScan:
    def test_smallest_range(self):
        assert ppp2_scan(2, jobs=1) == []

    def test_desk_scale_range_is_empty(self):
        hits = ppp2_scan(500, jobs=2)
        assert hits == [], f"integer roots found: {hits}"

    def test_rejects_tiny_range(self):
        with pytest.raises(DomainError):
            ppp2_scan(1)

    @pytest.mark.extended
    def test_full_range_is_empty(self):
        hits = ppp2_scan(5000)
        assert hits == [], f"integer roots found: {hits}"


class TestTable:
    @pytest.mark.parametrize(
        "m, n, P, row, low, high",
        [
            (2, 1, 0.0, TableRow.p_le_n2_lt_m2, Prediction.stable, Prediction.stable),
            (2, 1, 3.0, TableRow.n2_lt_p_le_m2, Prediction.unstable, Prediction.stable),
            (2, 1, 6.0, TableRow.n2_lt_m2_lt_p, Prediction.unstable, Prediction.stable),
            (1, 2, 0.0, TableRow.p_lt_m2_lt_n2, Prediction.stable, Prediction.stable),
            (1, 2, 1.0, TableRow.p_eq_m2_lt_n2, Prediction.unknown, Prediction.stable),
            (1, 2, 3.0, TableRow.m2_lt_p_le_n2, Prediction.stable, Prediction.stable),
            (1, 2, 6.0, TableRow.m2_lt_n2_lt_p, Prediction.stable, Prediction.stable),
            (2, 3, 0.0, TableRow.p_lt_m2_lt_n2, Prediction.stable, Prediction.unstable),
        ],
    )
    def test_rows(self, m, n, P, row, low, high):
        report = table_regime(m, n, P)
        assert report.ordering is row
        assert report.low_energy_prediction is low
        assert report.high_energy_prediction is high
        assert report.theorem_refs

    @pytest.mark.parametrize(
        "m, n, P, tags",
        [
            (2, 1, 0.0, ["stability0", "stability11"]),
            (2, 1, 3.0, ["stability2"]),
            (2, 1, 6.0, ["stability3"]),
            (1, 2, 0.0, ["stability12"]),
            (1, 2, 1.0, ["t:limit-case"]),
            (1, 2, 3.0, ["stability22"]),
            (1, 2, 6.0, ["stability4"]),
        ],
    )
    def test_theorem_column(self, m, n, P, tags):
        assert table_regime(m, n, P).theorem_refs == tags

    def test_gamma_dependence_flag(self):
        assert not table_regime(2, 1, 3.0).depends_on_gamma
        assert table_regime(1, 2, 3.0).depends_on_gamma

    def test_boundary_hint_only_below_the_load(self):
        below = table_regime(1, 6, 0.0)
        assert below.high_energy_prediction is Prediction.boundary
        assert below.conjecture_hint is Prediction.stable
        above = table_regime(1, 6, 2.0)
        assert above.high_energy_prediction is Prediction.boundary
        assert above.conjecture_hint is None

    def test_e1_is_reported_where_it_applies(self):
        assert table_regime(2, 1, 3.0).instability_energy_bound == pytest.approx(2.0)
        assert table_regime(1, 2, 0.0).instability_energy_bound is None

    def test_json_round_trip(self):
        report = table_regime(1, 2, 7.0)
        assert RegimeReport.model_validate_json(report.model_dump_json()) == report

    @pytest.mark.parametrize("m, n, P", [(2, 2, 0.0), (1, 2, -1.0), (1, 2, math.nan)])
    def test_uncovered_inputs(self, m, n, P):
        with pytest.raises(DomainError):
            table_regime(m, n, P)


def _low_energy(m: int, P: float) -> float:
    bottom = ModeParams(k=m, P=P).bottom_energy
    return (bottom if bottom is not None else 0.0) + 1e-3


TABLE_TRIPLES = [(2, 1, 0.0), (2, 1, 3.0), (2, 1, 6.0), (1, 2, 0.0), (1, 2, 1.0), (1, 2, 3.0), (1, 2, 6.0)]


@pytest.mark.slow
@pytest.mark.parametrize("m, n, P", TABLE_TRIPLES)
def test_monodromy_reproduces_the_table(m, n, P, tight_config):
    report = table_regime(m, n, P)
    expected = {Prediction.stable: Verdict.stable, Prediction.unstable: Verdict.unstable}
    if report.low_energy_prediction is not Prediction.unknown:
        low = classify_stability(m, n, P, _low_energy(m, P), tight_config).verdict
        assert low is expected[report.low_energy_prediction], "low energy"
    high = classify_stability(m, n, P, 1e6, tight_config).verdict
    assert high is expected[report.high_energy_prediction], "high energy"


@pytest.mark.parametrize("m, n, P", [(1, 2, 3.0), (1, 2, 7.0)])
def test_stable_just_above_the_bottom_of_the_well(m, n, P, tight_config):
    bottom = ModeParams(k=m, P=P).bottom_energy
    result = monodromy(build_hill(m, n, P, bottom * (1.0 - 1e-4)), tight_config, marginal_tol=1e-12)
    assert result.verdict is Verdict.stable
    assert result.discriminant < 0.0


class TestCertificate:
    def test_covers_two_to_one(self):
        assert small_mode_certificate(2, 1, 0.0)
        assert small_mode_certificate(2, 1, 1.0)

    def test_ratio_exactly_at_the_bound(self):
        assert small_mode_certificate(22, 21, 0.0, DEFAULT_CERTIFICATE_EPS)

    def test_outside_its_rows(self):
        assert not small_mode_certificate(1, 2, 0.0)
        assert not small_mode_certificate(2, 1, 2.0)
        assert not small_mode_certificate(23, 22, 0.0)

    def test_rejects_bad_eps(self):
        with pytest.raises(DomainError):
            small_mode_certificate(2, 1, 0.0, 1.0)


class TestLargeEnergyLimit:
    def test_first_zero(self):
        theta = first_zero_theta()
        assert theta == pytest.approx(2.0**1.25 * sigma_constant(), abs=1e-7)
        assert theta == pytest.approx(3.118, abs=1e-3)

    @pytest.mark.parametrize("gamma", [1.5, 2.25, 4.0, 5.0, 5.44, 8.0, 12.0])
    def test_dichotomy(self, gamma):
        membership, _ = gamma_oracle(Fraction(str(gamma)))
        result = cazenave_limit_classify(gamma)
        expected = Verdict.unstable if membership is GammaMembership.in_iu else Verdict.stable
        assert result.verdict is expected
        assert result.det == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.slow
    def test_agrees_with_exact_membership_on_random_ratios(self):
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 50:
            m, n = (int(value) for value in rng.integers(1, 13, size=2))
            gamma_class = classify_gamma(m, n)
            if m == n or _near_endpoint(gamma_class.gamma):
                continue
            result = cazenave_limit_classify(gamma_class.gamma)
            expected = Verdict.unstable if gamma_class.membership is GammaMembership.in_iu else Verdict.stable
            assert result.verdict is expected, (m, n)
            checked += 1

    def test_small_perturbation_stays_close(self):
        base = cazenave_limit_classify(4.0)
        perturbed = cazenave_limit_classify(4.0, eps=1e-4, nu=1.0, nu_prime=0.5)
        assert perturbed.trace == pytest.approx(base.trace, abs=1e-2)
        assert perturbed.verdict is base.verdict

    def test_zero_nu_branch(self):
        result = cazenave_limit_classify(2.25, eps=1e-4, nu=0.0, nu_prime=1.0)
        assert result.verdict is Verdict.unstable

    def test_eps_sign_must_follow_nu(self):
        with pytest.raises(DomainError):
            cazenave_limit_classify(4.0, eps=-1e-3, nu=1.0)
        with pytest.raises(DomainError):
            cazenave_limit_classify(4.0, eps=-1e-3, nu=0.0)

    @pytest.mark.parametrize("gamma", [0.0, -1.0, math.inf])
    def test_rejects_non_positive_gamma(self, gamma):
        with pytest.raises(DomainError):
            cazenave_limit_classify(gamma)
