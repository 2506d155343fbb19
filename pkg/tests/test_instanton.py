"""
Unit tests for the instanton action, dilute-gas sums and R calibration.
"""

import logging
import math

import pytest

from pathint.errors import ConfigurationError, DomainError
from pathint.instanton import (
    Endpoints,
    InstantonParams,
    RProvenance,
    band_width,
    bessel_reference,
    calibrate_from_oracle,
    calibrate_r,
    dilute_gas_propagator,
    energy_splitting,
    instanton_action,
    periodic_band_energy,
    periodic_sector_sum,
    periodic_theta_integral,
    profile_action,
    r_stability,
    sector_table,
    well_to_well_action,
)
from pathint.model import Potential
from pathint.spectral import splitting


class TestInstantonAction:
    """Test the one-instanton action."""

    def test_examples(self) -> None:
        """Test the closed forms at (3, 1) and (1, 2)."""
        action, omega = instanton_action(3.0, 1.0)
        assert action == pytest.approx(2.0 / 3.0, rel=1e-15)
        assert omega == pytest.approx(1.0, rel=1e-15)
        action, omega = instanton_action(1.0, 2.0)
        assert action == pytest.approx(16.0 / (3.0 * math.sqrt(3.0)), rel=1e-14)
        assert action == pytest.approx(3.0792, abs=1e-4)
        assert omega == pytest.approx(1.1547, abs=1e-4)

    def test_profile_quadrature(self) -> None:
        """Test the action integrated along the profile."""
        action, _ = instanton_action(1.0, 2.0)
        assert profile_action(1.0, 2.0) == pytest.approx(action, rel=1e-8)

    def test_algebraic_identity(self) -> None:
        """Test S = (2/3) w a^2."""
        for lam, a in ((1.0, 2.0), (0.3, 1.7), (5.0, 0.4)):
            action, omega = instanton_action(lam, a, verify=False)
            assert action == pytest.approx(2.0 / 3.0 * omega * a * a, rel=1e-12)

    def test_cubic_scaling(self) -> None:
        """Test S(lam, s a) = s^3 S(lam, a)."""
        base, _ = instanton_action(0.8, 1.1, verify=False)
        scaled, _ = instanton_action(0.8, 2.5 * 1.1, verify=False)
        assert scaled == pytest.approx(2.5**3 * base, rel=1e-12)

    def test_well_to_well_matches(self) -> None:
        """Test the momentum integral between minima for both potential families."""
        action, _ = instanton_action(1.0, 2.0)
        assert well_to_well_action(Potential.double_well(1.0, 2.0)) == pytest.approx(action, rel=1e-9)
        assert well_to_well_action(Potential.periodic()) == pytest.approx(8.0, rel=1e-9)
        with pytest.raises(DomainError):
            well_to_well_action(Potential.harmonic())


class TestInstantonParams:
    """Test parameter construction and R provenance."""

    def test_double_well(self) -> None:
        """Test derived frequency and action."""
        params = InstantonParams.double_well(1.0, 2.0)
        assert params.omega**2 == pytest.approx(4.0 / 3.0, rel=1e-14)
        assert params.provenance is RProvenance.UNSET
        assert params.potential() == Potential.double_well(1.0, 2.0)

    def test_user_r(self) -> None:
        """Test that a supplied R is tagged as user provenance."""
        params = InstantonParams.double_well(1.0, 2.0, r=0.5)
        assert params.provenance is RProvenance.USER

    def test_invalid_r(self) -> None:
        """Test that negative R is rejected."""
        with pytest.raises(DomainError):
            InstantonParams(1.0, 1.0, r=-0.1)

    def test_unset_r(self) -> None:
        """Test that quantities needing R raise when it is unset."""
        params = InstantonParams.double_well(1.0, 2.0)
        with pytest.raises(ConfigurationError):
            energy_splitting(params)
        with pytest.raises(ConfigurationError):
            dilute_gas_propagator(10.0, params)
        with pytest.raises(ConfigurationError):
            periodic_band_energy(0.0, params)

    def test_periodic_params(self) -> None:
        """Test parameters of the cosine potential."""
        params = InstantonParams.periodic(Potential.periodic())
        assert params.omega == pytest.approx(1.0, rel=1e-14)
        assert params.action == pytest.approx(8.0, rel=1e-9)
        with pytest.raises(ConfigurationError):
            params.potential()


class TestDiluteGas:
    """Test the instanton-sector sums."""

    def setup_method(self) -> None:
        """Parameters with unit tunneling rate R exp(-S) = 1."""
        self.params = InstantonParams(omega=1.0, action=1.0, r=math.e)

    def test_zero_r_single_well(self) -> None:
        """Test that R = 0 leaves only the zero-instanton sector."""
        result = dilute_gas_propagator(5.0, self.params.with_r(0.0))
        expected = math.sqrt(1.0 / math.pi) * math.exp(-2.5)
        assert list(result.sector_weights) == [0]
        assert result.sector_weights[0] == pytest.approx(expected, rel=1e-15)
        assert result.closed_form == pytest.approx(expected, rel=1e-15)

    def test_partial_sums_converge(self) -> None:
        """Test partial sums through three pairs against cosh at Q = 1."""
        result = dilute_gas_propagator(1.0, self.params)
        assert result.q == pytest.approx(1.0, rel=1e-14)
        partial = result.partial_sums()
        assert partial[3] == pytest.approx(result.closed_form, rel=1e-4)
        assert all(b > a for a, b in zip(partial, partial[1:]))
        assert partial[-1] == pytest.approx(result.closed_form, rel=1e-14)

    def test_sector_parity(self) -> None:
        """Test even sectors for same-well and odd for opposite-well endpoints."""
        same = dilute_gas_propagator(3.0, self.params, Endpoints.SAME_WELL)
        opposite = dilute_gas_propagator(3.0, self.params, "opposite")
        assert all(k % 2 == 0 for k in same.sector_weights)
        assert all(k % 2 == 1 for k in opposite.sector_weights)
        assert opposite.closed_form == pytest.approx(
            same.prefactor * math.sinh(3.0), rel=1e-14
        )
        assert sum(opposite.sector_weights.values()) == pytest.approx(
            opposite.closed_form, rel=1e-13
        )

    def test_truncated_sectors(self) -> None:
        """Test that max_instantons caps the table."""
        result = dilute_gas_propagator(3.0, self.params, max_instantons=4)
        assert sorted(result.sector_weights) == [0, 2, 4]
        rows = sector_table(result)
        assert [row["instantons"] for row in rows] == [0, 2, 4]
        assert rows[-1]["partial_sum"] == pytest.approx(sum(result.sector_weights.values()))

    def test_energies(self) -> None:
        """Test E = hbar w / 2 -+ hbar R exp(-S / hbar)."""
        params = InstantonParams.double_well(1.0, 2.0, r=0.7)
        low, high = dilute_gas_propagator(10.0, params).energies
        rate = 0.7 * math.exp(-params.action)
        assert low == pytest.approx(0.5 * params.omega - rate, rel=1e-14)
        assert high - low == pytest.approx(energy_splitting(params), rel=1e-12)

    def test_non_positive_beta(self) -> None:
        """Test that beta must be positive."""
        with pytest.raises(DomainError):
            dilute_gas_propagator(0.0, self.params)


class TestSplitting:
    """Test the splitting formula and R calibration."""

    def test_zero_and_monotone(self) -> None:
        """Test dE(R = 0) = 0 and monotonic growth in R."""
        params = InstantonParams.double_well(1.0, 2.0)
        assert energy_splitting(params.with_r(0.0)) == 0.0
        values = [energy_splitting(params.with_r(r)) for r in (0.1, 0.5, 2.0)]
        assert values[0] < values[1] < values[2]

    def test_log_derivative_in_inverse_hbar(self) -> None:
        """Test d ln dE / d(1/hbar) = -S at fixed R, up to the hbar prefactor."""
        r = 1.3
        hbars = (0.5, 0.5 / (1.0 + 1e-6))
        logs = [
            math.log(energy_splitting(InstantonParams.double_well(1.0, 2.0, hbar=h, r=r)) / (2 * h))
            for h in hbars
        ]
        slope = (logs[1] - logs[0]) / (1.0 / hbars[1] - 1.0 / hbars[0])
        action, _ = instanton_action(1.0, 2.0)
        assert slope == pytest.approx(-action, rel=1e-6)

    def test_calibration_round_trip(self) -> None:
        """Test energy_splitting(calibrate_r(p, d)) = d."""
        params = InstantonParams.double_well(1.0, 2.0, hbar=0.8)
        calibrated = calibrate_r(params, 0.0123)
        assert calibrated.provenance is RProvenance.ORACLE
        assert energy_splitting(calibrated) == pytest.approx(0.0123, rel=1e-14)
        with pytest.raises(DomainError):
            calibrate_r(params, 0.0)

    def test_calibrate_from_oracle(self) -> None:
        """Test that oracle calibration reproduces the oracle splitting."""
        params = calibrate_from_oracle(InstantonParams.double_well(1.0, 2.0))
        assert params.provenance is RProvenance.ORACLE
        assert energy_splitting(params) == pytest.approx(
            splitting(Potential.double_well(1.0, 2.0)), rel=1e-12
        )

    def test_r_stability(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test that R stability is reported and warns only when unstable."""
        with caplog.at_level(logging.WARNING, logger="pathint.instanton"):
            stability = r_stability(1.0, 2.0)
        assert stability.hbars == (0.6, 0.8, 1.0)
        assert len(stability.r_values) == 3
        assert all(r > 0 for r in stability.r_values)
        assert stability.stable == (stability.variation < 0.25)
        warned = any("Calibrated R varies" in record.message for record in caplog.records)
        assert warned == (not stability.stable)

    def test_exponential_dominates_hbar_dependence(self) -> None:
        """Test that calibrated R varies far less than exp(-S / hbar) over hbar."""
        stability = r_stability(1.0, 2.0)
        action, _ = instanton_action(1.0, 2.0)
        exponential_range = math.exp(action * (1.0 / 0.6 - 1.0))
        r_range = max(stability.r_values) / min(stability.r_values)
        assert r_range < 0.5 * exponential_range


class TestPeriodicBand:
    """Test the theta band and the periodic sector sums."""

    def setup_method(self) -> None:
        """Parameters with a known tunneling rate."""
        self.params = InstantonParams(omega=1.0, action=2.0, r=0.5)
        self.rate = 0.5 * math.exp(-2.0)

    def test_band_center(self) -> None:
        """Test E(pi/2) = hbar w / 2."""
        assert periodic_band_energy(math.pi / 2, self.params) == pytest.approx(0.5, rel=1e-14)

    def test_band_width(self) -> None:
        """Test E(0) - E(pi) = -4 hbar R exp(-S / hbar)."""
        difference = periodic_band_energy(0.0, self.params) - periodic_band_energy(
            math.pi, self.params
        )
        assert difference == pytest.approx(-4.0 * self.rate, rel=1e-12)
        assert band_width(self.params) == pytest.approx(4.0 * self.rate, rel=1e-14)

    def test_theta_domain(self) -> None:
        """Test that theta must lie in [0, 2 pi)."""
        with pytest.raises(DomainError):
            periodic_band_energy(2.0 * math.pi, self.params)

    def test_bessel_identity_example(self) -> None:
        """Test sum 1/(n!)^2 = I_0(2)."""
        assert periodic_sector_sum(1.0) == pytest.approx(2.2796, abs=1e-4)
        assert periodic_sector_sum(1.0) == pytest.approx(bessel_reference(1.0), rel=1e-13)

    @pytest.mark.parametrize("q", [0.0, 0.5, 1.0, 2.5, 5.0])
    def test_sector_sum_matches_theta_integral(self, q: float) -> None:
        """Test the constrained sector sum against the theta integral."""
        assert periodic_sector_sum(q) == pytest.approx(periodic_theta_integral(q), rel=1e-10)

    def test_negative_q(self) -> None:
        """Test that Q must be non-negative."""
        with pytest.raises(DomainError):
            periodic_sector_sum(-1.0)
