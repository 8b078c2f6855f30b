import io

import numpy as np
import pytest
from pydantic import ValidationError

from beam_modes.duffing import orbit_from_energy, orbit_trajectory
from beam_modes.errors import DomainError
from beam_modes.hill_floquet import build_hill, floquet_exponent, monodromy
from beam_modes.integrate import integrate
from beam_modes.schemas import ModeParams, TransferVerdict
from beam_modes.two_mode import (
    DEFAULT_SEED_RATIO,
    TRAJECTORY_COLUMNS,
    EnergyChannels,
    TwoModeConfig,
    channel_energies,
    growth_exponent,
    potential,
    potential_hessian,
    simulate,
    transfer_report,
    write_trajectory_csv,
)


class TestConfig:
    def test_from_energies_starts_channels_exactly(self):
        config = TwoModeConfig.from_energies(2, 1, 3.0, 1.0, 1e-8)
        e_w, e_z, e_wz = channel_energies(2, 1, 3.0, config.w0, config.w1, config.z0, config.z1)
        assert e_w == pytest.approx(1.0)
        assert e_z == pytest.approx(1e-8)
        assert e_wz == 0.0
        assert config.total_energy == pytest.approx(1.0 + 1e-8)

    def test_seeded_perturbation(self):
        config = TwoModeConfig.seeded(2, 1, 0.0, 1.0)
        amplitude = orbit_from_energy(ModeParams(k=2, P=0.0), 1.0).amplitude
        assert config.z0 == pytest.approx(DEFAULT_SEED_RATIO * amplitude)
        assert config.z1 == 0.0

    def test_modes_must_differ(self):
        with pytest.raises(ValidationError):
            TwoModeConfig(m=2, n=2, P=0.0, w0=1.0, w1=0.0, z0=0.0, z1=0.0)

    def test_negative_kick_energy(self):
        with pytest.raises(DomainError):
            TwoModeConfig.from_energies(2, 1, 0.0, 1.0, -1e-3)


class TestSimulate:
    def test_zero_small_mode_stays_zero_and_reproduces_the_orbit(self):
        orbit = orbit_from_energy(ModeParams(k=2, P=1.0), 1.5)
        config = TwoModeConfig(m=2, n=3, P=1.0, w0=orbit.canonical_initial[0], w1=0.0, z0=0.0, z1=0.0)
        trajectory, _ = simulate(config, orbit.period)
        assert np.all(trajectory.component(2) == 0.0)
        assert np.all(trajectory.component(3) == 0.0)
        single = orbit_trajectory(orbit, 1.0)
        t = np.linspace(0.0, orbit.period, 33)
        assert np.allclose(trajectory.at(t)[0], single.at(t)[0], atol=1e-8)

    def test_relabeling_swaps_trajectories(self):
        config = TwoModeConfig(m=1, n=2, P=0.5, w0=0.8, w1=0.1, z0=0.3, z1=-0.2)
        first, _ = simulate(config, 5.0)
        second, _ = simulate(config.swapped(), 5.0)
        t = np.linspace(0.0, 5.0, 41)
        a, b = first.at(t), second.at(t)
        assert np.allclose(a[0:2], b[2:4], atol=1e-8)
        assert np.allclose(a[2:4], b[0:2], atol=1e-8)

    def test_energy_is_conserved_and_trajectory_stays_in_the_sublevel(self):
        config = TwoModeConfig(m=1, n=3, P=2.0, w0=1.1, w1=0.0, z0=0.05, z1=0.2)
        trajectory, channels = simulate(config, 20.0)
        assert channels.relative_drift < 1e-8
        values = [potential(1, 3, 2.0, w, z) for w, z in zip(trajectory.component(0), trajectory.component(2))]
        assert max(values) <= config.total_energy + 1e-8

    def test_rejects_non_positive_horizon(self):
        with pytest.raises(DomainError):
            simulate(TwoModeConfig.from_energies(2, 1, 0.0, 1.0, 1e-8), 0.0)

    def test_trajectory_csv(self):
        trajectory, channels = simulate(TwoModeConfig.from_energies(2, 1, 0.0, 1.0, 1e-6), 1.0)
        buffer = io.StringIO()
        write_trajectory_csv(trajectory, channels, buffer)
        lines = buffer.getvalue().splitlines()
        assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
        assert len(lines) == len(trajectory) + 1


class TestTransfer:
    @pytest.mark.slow
    def test_unstable_row_transfers_energy(self, tight_config):
        config = TwoModeConfig.from_energies(2, 1, 3.0, 1.0, 1e-8)
        _, channels = simulate(config, 100.0, tight_config)
        report = transfer_report(channels)
        assert channels.relative_drift < 1e-8
        assert report.max_growth_ratio > 1e3
        assert report.verdict_hint is TransferVerdict.transfer_observed

    @pytest.mark.slow
    def test_stable_row_keeps_energy(self, tight_config):
        config = TwoModeConfig.from_energies(2, 1, 0.0, 1.0, 1e-8)
        _, channels = simulate(config, 1e3, tight_config)
        report = transfer_report(channels)
        assert channels.relative_drift < 1e-8
        assert 1.0 <= report.max_growth_ratio < 10.0
        assert report.verdict_hint is TransferVerdict.no_transfer

    def test_constant_channel_means_no_transfer(self):
        times = np.linspace(0.0, 1.0, 5)
        flat = np.full(5, 2.0)
        channels = EnergyChannels(times=times, E_w=flat.copy(), E_z=flat.copy(), E_wz=np.zeros(5), E_total=4.0)
        report = transfer_report(channels)
        assert report.max_growth_ratio == 1.0
        assert report.verdict_hint is TransferVerdict.no_transfer

    def test_zero_baseline_is_rejected(self):
        times = np.linspace(0.0, 1.0, 3)
        channels = EnergyChannels(times=times, E_w=np.ones(3), E_z=np.zeros(3), E_wz=np.zeros(3), E_total=1.0)
        with pytest.raises(DomainError):
            transfer_report(channels)

    def test_growth_matches_floquet_exponent(self, tight_config):
        m, n, P, E_w = 2, 1, 3.0, 1.0
        result = monodromy(build_hill(m, n, P, E_w), tight_config)
        expected = floquet_exponent(result)
        config = TwoModeConfig.from_energies(m, n, P, E_w, 1e-12)
        window = 6.0 * result.period
        trajectory, _ = simulate(config, window, tight_config)
        measured = growth_exponent(trajectory, window, period=result.period)
        assert measured == pytest.approx(expected, rel=0.1)


class TestPotential:
    def test_origin(self):
        assert potential(2, 3, 1.0, 0.0, 0.0) == 0.0

    def test_local_maximum_above_both_loads(self):
        eigenvalues = np.linalg.eigvalsh(potential_hessian(1, 2, 5.0, 0.0, 0.0))
        assert np.all(eigenvalues < 0.0)

    def test_convex_below_both_loads(self):
        for w in np.linspace(-2.0, 2.0, 9):
            for z in np.linspace(-2.0, 2.0, 9):
                eigenvalues = np.linalg.eigvalsh(potential_hessian(1, 2, 0.5, float(w), float(z)))
                assert np.all(eigenvalues >= -1e-12)

    def test_hessian_matches_finite_differences(self):
        h = 1e-4
        w, z = 0.3, -0.7

        def grad(w, z):
            return np.array(
                [
                    (potential(2, 1, 1.5, w + h, z) - potential(2, 1, 1.5, w - h, z)) / (2 * h),
                    (potential(2, 1, 1.5, w, z + h) - potential(2, 1, 1.5, w, z - h)) / (2 * h),
                ]
            )

        numeric = np.column_stack(
            [(grad(w + h, z) - grad(w - h, z)) / (2 * h), (grad(w, z + h) - grad(w, z - h)) / (2 * h)]
        )
        assert np.allclose(potential_hessian(2, 1, 1.5, w, z), numeric, atol=1e-4)


def test_growth_exponent_needs_two_periods():
    trajectory = integrate(lambda _t, y: np.zeros(4), [0.0, 0.0, 1.0, 0.0], (0.0, 1.0))
    with pytest.raises(DomainError):
        growth_exponent(trajectory, 1.0, period=0.7)
    assert growth_exponent(trajectory, 1.0) == pytest.approx(0.0, abs=1e-12)
