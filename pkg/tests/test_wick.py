"""
Unit tests for Wick pairings and the derivative-assignment engine.
"""

import math

import pytest
import sympy

from pathint.errors import CapacityError, DomainError, PreconditionError
from pathint.model import Signature
from pathint.wick import (
    LAMBDA,
    Pairing,
    contraction_terms,
    disconnected_cancellation_check,
    enumerate_pairings,
    euclidean_first_order_ke_ratio,
    euclidean_kernel,
    evaluate_terms,
    first_order_two_point_terms,
    free_npoint,
    pairing_count,
)


def _recursive_count(n_points: int) -> int:
    """Matchings of n_points labels: pick a partner for the first one, recurse."""
    if n_points == 0:
        return 1
    return (n_points - 1) * _recursive_count(n_points - 2)


class TestPairings:
    """Test perfect-matching enumeration."""

    def test_small_examples(self) -> None:
        """Test the 2, 4 and 6 point counts."""
        assert [p.pairs for p in enumerate_pairings(2)] == [((1, 2),)]
        assert len(enumerate_pairings(4)) == 3
        assert len(enumerate_pairings(6)) == 15
        assert enumerate_pairings(0) == [Pairing(())]

    @pytest.mark.parametrize("n_points", [2, 4, 6, 8, 10, 12])
    def test_count_identity(self, n_points: int) -> None:
        """Test |pairings(2n)| = (2n - 1)!! against an independent counter."""
        pairings = enumerate_pairings(n_points)
        assert len(pairings) == _recursive_count(n_points) == pairing_count(n_points)
        assert len({p.pairs for p in pairings}) == len(pairings)

    def test_canonical_order(self) -> None:
        """Test that pairs are sorted within and across pairs."""
        for pairing in enumerate_pairings(8):
            assert all(i < j for i, j in pairing.pairs)
            assert list(pairing.pairs) == sorted(pairing.pairs)

    def test_guards(self) -> None:
        """Test the odd-count and capacity guards."""
        with pytest.raises(DomainError):
            enumerate_pairings(5)
        with pytest.raises(CapacityError):
            enumerate_pairings(18)

    def test_non_canonical_pairing_rejected(self) -> None:
        """Test that a Pairing must be canonical and complete."""
        with pytest.raises(DomainError):
            Pairing(((2, 1),))
        with pytest.raises(DomainError):
            Pairing(((1, 3),))


class TestFreeNPoint:
    """Test free n-point functions."""

    def test_odd_is_zero(self) -> None:
        """Test that an odd number of points gives exactly zero."""
        assert free_npoint([0.1, 0.2, 0.3], lambda t, u: 1.0) == 0.0

    def test_two_point_is_kernel(self) -> None:
        """Test that the two-point function is the kernel itself."""
        kernel = euclidean_kernel(40.0)
        assert free_npoint([0.3, 1.1], kernel) == kernel(0.3, 1.1)

    def test_four_equal_points(self) -> None:
        """Test <q^4> = 3 <q^2>^2 for a constant kernel."""
        assert free_npoint([0.0] * 4, lambda t, u: 0.7) == pytest.approx(3 * 0.49, rel=1e-15)

    def test_four_point_structure(self) -> None:
        """Test the three-term structure of the free four-point function."""
        kernel = euclidean_kernel(40.0)
        t = [0.0, 0.4, 1.0, 2.5]
        expected = (
            kernel(t[0], t[1]) * kernel(t[2], t[3])
            + kernel(t[0], t[2]) * kernel(t[1], t[3])
            + kernel(t[0], t[3]) * kernel(t[1], t[2])
        )
        assert free_npoint(t, kernel) == pytest.approx(expected, rel=1e-14)


class TestContractionTerms:
    """Test the derivative-assignment expansion."""

    def test_first_order_euclidean(self) -> None:
        """Test the 576 connected and 144 disconnected assignments."""
        connected, disconnected = first_order_two_point_terms()
        assert connected.multiplicity == 576
        assert disconnected.multiplicity == 144
        assert connected.multiplicity + disconnected.multiplicity == math.factorial(6)
        assert connected.coefficient == -LAMBDA / 2
        assert disconnected.coefficient == -LAMBDA / 8
        assert connected.kernel_factors == (("x", "x"), ("x", "x1"), ("x", "x2"))
        assert disconnected.kernel_factors == (("x", "x"), ("x", "x"), ("x1", "x2"))
        assert connected.is_connected and not disconnected.is_connected
        assert connected.integrated_labels == ("x",)
        assert connected.external_labels == ("x1", "x2")

    def test_first_order_real_time(self) -> None:
        """Test the real-time coefficients -i lambda/2 and -i lambda/8."""
        connected, disconnected = first_order_two_point_terms(Signature.REAL_TIME)
        assert sympy.simplify(connected.coefficient + sympy.I * LAMBDA / 2) == 0
        assert sympy.simplify(disconnected.coefficient + sympy.I * LAMBDA / 8) == 0

    @pytest.mark.parametrize("signature", list(Signature))
    def test_symmetry_factors(self, signature: Signature) -> None:
        """Test symmetry factors 1/2 and 1/8 in both signatures."""
        connected, disconnected = first_order_two_point_terms(signature)
        assert connected.symmetry_factor == sympy.Rational(1, 2)
        assert disconnected.symmetry_factor == sympy.Rational(1, 8)

    def test_free_two_point(self) -> None:
        """Test that zero vertices give the single propagator with unit weight."""
        (term,) = contraction_terms(("x1", "x2"), 0)
        assert term.kernel_factors == (("x1", "x2"),)
        assert term.coefficient == 1
        assert term.multiplicity == 2

    def test_vacuum_term(self) -> None:
        """Test the order-lambda vacuum bubble."""
        (term,) = contraction_terms((), 1)
        assert term.kernel_factors == (("x", "x"), ("x", "x"))
        assert term.multiplicity == 24
        assert term.coefficient == -LAMBDA / 8
        assert not term.is_connected

    def test_odd_derivatives_vanish(self) -> None:
        """Test that an odd number of derivatives gives no terms."""
        assert contraction_terms(("x1",), 1) == []

    def test_guards(self) -> None:
        """Test the vertex, derivative and label guards."""
        with pytest.raises(CapacityError):
            contraction_terms(("x1", "x2"), 2)
        with pytest.raises(CapacityError):
            contraction_terms(tuple(f"x{i}" for i in range(1, 7)), 1)
        with pytest.raises(DomainError):
            contraction_terms(("x1", "x1"), 1)
        with pytest.raises(DomainError):
            contraction_terms(("x", "x1"), 1)


class TestEvaluation:
    """Test numerical evaluation of symbolic terms."""

    def test_ke_ratio_example(self) -> None:
        """Test the first-order coefficient lambda/32 at beta omega = 40."""
        assert euclidean_first_order_ke_ratio(40.0) == pytest.approx(1.0 / 32.0, rel=1e-2)

    def test_ke_ratio_scaling(self) -> None:
        """Test lambda hbar / (32 m^2 omega^2) for other parameters."""
        value = euclidean_first_order_ke_ratio(40.0, m=2.0, omega=1.5, lam=0.3, hbar=0.7)
        assert value == pytest.approx(0.3 * 0.7 / (32 * 4.0 * 2.25), rel=1e-2)

    def test_ke_ratio_zero_and_linear(self) -> None:
        """Test lambda = 0 gives zero and the result is linear in lambda."""
        assert euclidean_first_order_ke_ratio(40.0, lam=0.0) == 0.0
        assert euclidean_first_order_ke_ratio(40.0, lam=2.0) == pytest.approx(
            2.0 * euclidean_first_order_ke_ratio(40.0, lam=1.0), rel=1e-12
        )

    def test_ke_ratio_dirichlet_kernel(self) -> None:
        """Test that the finite-beta kernel approaches the same coefficient."""
        assert euclidean_first_order_ke_ratio(100.0, kind="dirichlet") == pytest.approx(
            1.0 / 32.0, rel=2e-2
        )

    def test_small_beta_precondition(self) -> None:
        """Test that beta omega below the guard raises."""
        with pytest.raises(PreconditionError):
            euclidean_first_order_ke_ratio(10.0)

    def test_missing_time_raises(self) -> None:
        """Test that every external label needs a time."""
        terms = first_order_two_point_terms()
        with pytest.raises(DomainError):
            evaluate_terms(terms, euclidean_kernel(40.0), {"x1": 0.0})

    def test_kernel_argument_order_irrelevant(self) -> None:
        """Test that swapping kernel arguments leaves every term unchanged."""
        kernel = euclidean_kernel(40.0)
        times = {"x1": -0.5, "x2": 0.8}
        terms = first_order_two_point_terms()
        forward = evaluate_terms(terms, kernel, times, lam=1.0)
        backward = evaluate_terms(
            terms, lambda t, u: kernel(u, t), times, lam=1.0, integration_range=kernel.interval
        )
        assert forward == pytest.approx(backward, rel=1e-12)

    def test_unknown_kernel_kind(self) -> None:
        """Test that an unknown kernel kind is rejected."""
        with pytest.raises(DomainError):
            euclidean_kernel(40.0, kind="retarded")


class TestCancellation:
    """Test the disconnected-part cancellation."""

    def setup_method(self) -> None:
        """Build the report once."""
        self.report = disconnected_cancellation_check(40.0, lam=0.1)

    def test_disconnected_cancels(self) -> None:
        """Test that the disconnected coefficient is exactly zero."""
        assert self.report.disconnected_coefficient == 0
        assert self.report.cancels

    def test_surviving_is_connected(self) -> None:
        """Test that the surviving order-lambda term is the connected one."""
        assert self.report.connected_term == first_order_two_point_terms()[0]
        assert LAMBDA in self.report.surviving.free_symbols

    def test_values(self) -> None:
        """Test <q^2> = 1/2 - lambda/16 at coincident points."""
        assert self.report.free_value == pytest.approx(0.5, rel=1e-14)
        assert self.report.first_order_value == pytest.approx(0.5 - 0.1 / 16.0, rel=1e-6)
