"""
Unit tests for topological phase bookkeeping.
"""

import cmath
import math

import numpy as np
import pytest

from pathint.errors import DomainError
from pathint.topology import (
    InterferenceSetup,
    StatisticsPhase,
    ab_relative_phase,
    dirac_charge_unit,
    dirac_string_phase,
    flux_quantum,
    shift_sectors,
    statistics_solutions,
    string_is_invisible,
    two_slit_intensity,
    winding_amplitude,
    wrap_phase,
)


class TestAharonovBohm:
    """Test interference with enclosed flux."""

    def test_zero_flux(self) -> None:
        """Test that no flux leaves the base phase."""
        result = ab_relative_phase(InterferenceSetup(base_phase=0.7))
        assert result.raw == 0.7
        assert result.wrapped == 0.7

    def test_half_quantum_flips_interference(self) -> None:
        """Test that e Phi / hbar c = pi turns constructive into destructive."""
        setup = InterferenceSetup(flux=math.pi)
        assert ab_relative_phase(setup).wrapped == pytest.approx(math.pi, rel=1e-15)
        assert two_slit_intensity(1.0, 1.0, InterferenceSetup()) == pytest.approx(4.0)
        assert two_slit_intensity(1.0, 1.0, setup) == pytest.approx(0.0, abs=1e-15)

    def test_flux_periodicity(self) -> None:
        """Test that adding one flux quantum changes nothing observable."""
        rng = np.random.default_rng(5)
        for _ in range(100):
            base, flux = rng.uniform(-5.0, 5.0, size=2)
            charge, hbar, c = rng.uniform(0.5, 2.0, size=3)
            setup = InterferenceSetup(base, flux, charge, hbar, c)
            shifted = InterferenceSetup(base, flux + flux_quantum(setup), charge, hbar, c)
            a1, a2 = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
            assert two_slit_intensity(a1, a2, shifted) == pytest.approx(
                two_slit_intensity(a1, a2, setup), rel=1e-12, abs=1e-12
            )
            phase = ab_relative_phase(setup).wrapped
            shifted_phase = ab_relative_phase(shifted).wrapped
            assert min(abs(phase - shifted_phase), 2 * math.pi - abs(phase - shifted_phase)) < 1e-9

    def test_overall_phase_invariance(self) -> None:
        """Test that a common phase on both amplitudes drops out."""
        rng = np.random.default_rng(9)
        setup = InterferenceSetup(flux=1.234)
        for _ in range(100):
            a1, a2 = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
            rotation = cmath.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
            assert two_slit_intensity(rotation * a1, rotation * a2, setup) == pytest.approx(
                two_slit_intensity(a1, a2, setup), rel=1e-12, abs=1e-14
            )

    def test_invalid_setup(self) -> None:
        """Test that non-positive charge and non-finite flux are rejected."""
        with pytest.raises(DomainError):
            InterferenceSetup(charge=0.0)
        with pytest.raises(DomainError):
            InterferenceSetup(flux=math.inf)

    def test_wrap_phase(self) -> None:
        """Test wrapping into [0, 2 pi)."""
        assert wrap_phase(-0.5) == pytest.approx(2.0 * math.pi - 0.5)
        assert wrap_phase(7.0) == pytest.approx(7.0 - 2.0 * math.pi)
        assert 0.0 <= wrap_phase(-1e-18) < 2.0 * math.pi


class TestStatistics:
    """Test exchange-statistics phases."""

    def test_three_dimensions(self) -> None:
        """Test that only bosons and fermions exist in 3D."""
        allowed = statistics_solutions(3)
        assert allowed.discrete == (0.0, math.pi)
        assert allowed.contains(0.0) and allowed.contains(math.pi) and allowed.contains(3 * math.pi)
        assert not allowed.contains(1.3)
        with pytest.raises(DomainError):
            StatisticsPhase(3, 1.3)

    def test_two_dimensions(self) -> None:
        """Test that any phase is allowed in 2D with C_n = exp(i n phi)."""
        allowed = statistics_solutions(2)
        assert allowed.discrete is None
        phase = StatisticsPhase(2, 1.3)
        for n in range(-3, 4):
            assert phase.coefficient(n) == pytest.approx(cmath.exp(1.3j * n))
        assert phase.coefficient(0) == 1.0

    def test_fermion_sign(self) -> None:
        """Test the relative minus sign of a single exchange."""
        assert StatisticsPhase(3, math.pi).exchange_sign == pytest.approx(-1.0)
        assert StatisticsPhase(3, 0.0).exchange_sign == 1.0

    def test_three_dimensional_closure(self) -> None:
        """Test that two exchanges compose to the identity for both allowed phases."""
        for phi in (0.0, math.pi):
            sign = StatisticsPhase(3, phi).exchange_sign
            assert sign * sign == pytest.approx(1.0)

    def test_unsupported_dimension(self) -> None:
        """Test that dimensions other than 2 and 3 are rejected."""
        with pytest.raises(DomainError):
            statistics_solutions(4)


class TestWindingSum:
    """Test winding-sector amplitude sums."""

    def setup_method(self) -> None:
        """Five random sectors."""
        rng = np.random.default_rng(21)
        values = rng.normal(size=(5, 2))
        self.sectors = {n: complex(re, im) for n, (re, im) in zip(range(-2, 3), values)}

    def test_bose_and_fermi(self) -> None:
        """Test plain and alternating sums."""
        assert winding_amplitude(self.sectors, 0.0) == pytest.approx(sum(self.sectors.values()))
        alternating = sum((-1) ** n * a for n, a in self.sectors.items())
        assert winding_amplitude(self.sectors, math.pi) == pytest.approx(alternating, abs=1e-12)

    def test_shift_identity(self) -> None:
        """Test that relabeling sectors by one multiplies the sum by exp(-i phi)."""
        phi = 0.77
        shifted = shift_sectors(self.sectors)
        assert winding_amplitude(shifted, phi) == pytest.approx(
            cmath.exp(-1j * phi) * winding_amplitude(self.sectors, phi), abs=1e-12
        )

    def test_linearity(self) -> None:
        """Test linearity in the sector amplitudes."""
        doubled = {n: 2.0 * a for n, a in self.sectors.items()}
        assert winding_amplitude(doubled, 0.4) == pytest.approx(
            2.0 * winding_amplitude(self.sectors, 0.4), abs=1e-12
        )

    def test_empty(self) -> None:
        """Test that no sectors give zero."""
        assert winding_amplitude({}, 1.0) == 0j


class TestDirac:
    """Test Dirac charge quantization."""

    def test_examples(self) -> None:
        """Test n = 0 and n = 1 at g = 1/2."""
        assert dirac_charge_unit(0, 0.5) == 0.0
        assert dirac_charge_unit(1, 0.5) == 1.0

    def test_product_invariant(self) -> None:
        """Test e g = n hbar c / 2."""
        for n in (1, 2, -3):
            e = dirac_charge_unit(n, 0.37, hbar=1.3, c=2.0)
            assert e * 0.37 == pytest.approx(n * 1.3 * 2.0 / 2.0, rel=1e-14)

    @pytest.mark.parametrize("n", [-2, -1, 1, 2, 5])
    def test_string_invisible_at_quantized_charge(self, n: int) -> None:
        """Test that the string phase is 2 pi n at quantized charge."""
        g = 0.8
        e = dirac_charge_unit(n, g)
        phase = dirac_string_phase(e, g)
        assert abs(phase) == pytest.approx(2.0 * math.pi * abs(n), rel=1e-14)
        assert string_is_invisible(phase)

    def test_string_visible_off_quantization(self) -> None:
        """Test that a non-quantized charge gives a visible string."""
        assert not string_is_invisible(dirac_string_phase(0.3, 0.8))

    def test_zero_magnetic_charge(self) -> None:
        """Test that g = 0 is a domain error."""
        with pytest.raises(DomainError):
            dirac_charge_unit(1, 0.0)
