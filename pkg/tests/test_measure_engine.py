"""
Unit Tests for Measure Engine
Tests atomic measures, Fourier transforms, zero sets and the non-decay probe
"""

import math
import pytest
import sys
import os
from fractions import Fraction
from unittest.mock import patch

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from lab_errors import ValidationError
from measure_engine import (
    fourier_nondecay_probe, fourier_transform, fourier_transform_terms, level_measure,
    scaled_support_max, tail_ratio, zero_set_member
)
from moran_system import preset_system
from spectrum_factory import lacunary_spectrum


@pytest.mark.unit
class TestAtomicMeasure:
    """Test suite for level_measure"""

    @pytest.fixture
    def cantor(self):
        return preset_system("cantor")

    # ========================================
    # MATERIALIZATION TESTS
    # ========================================

    def test_level_two_atoms(self, cantor):
        """Test that mu_2 has atoms {0, 1, 4, 5}/16"""
        measure = level_measure(cantor, 2)
        assert list(measure.numerators) == [0, 1, 4, 5]
        assert measure.denominator == 16
        assert measure.weight == Fraction(1, 4)

    def test_atoms_sorted(self):
        """Test ascending atoms on a mixed system"""
        measure = level_measure(preset_system("mixed"), 4)
        values = [int(a) for a in measure.numerators]
        assert values == sorted(values)
        assert measure.size == 36

    def test_level_cap(self, cantor):
        """Test that levels outside 1..max_level are refused"""
        with pytest.raises(ValidationError):
            level_measure(cantor, 0)
        with pytest.raises(ValidationError):
            level_measure(cantor, 13, max_level=12)

    def test_memory_guard(self, cantor):
        """Test that materialization is refused when memory is short"""
        with patch("measure_engine.psutil.virtual_memory") as memory:
            memory.return_value.available = 1000
            with pytest.raises(ValidationError):
                level_measure(cantor, 10)

    def test_direct_sum_matches_product(self, cantor):
        """Test that the atomic sum equals the first n product factors"""
        measure = level_measure(cantor, 5)
        xi = Fraction(3, 7)
        direct = measure.transform(xi)
        product = fourier_transform(cantor, xi, 5).value
        assert abs(direct - product) < 1e-12


@pytest.mark.unit
class TestFourierTransform:
    """Test suite for fourier_transform and fourier_transform_terms"""

    @pytest.fixture
    def cantor(self):
        return preset_system("cantor")

    # ========================================
    # EXACT VALUES
    # ========================================

    def test_origin(self, cantor):
        """Test mu^(0) = 1 with no tail"""
        result = fourier_transform(cantor, 0, 5)
        assert result.value == 1
        assert result.tail_bound == 0

    def test_exact_zero(self, cantor):
        """Test that xi = 2 is an exact zero (first factor vanishes)"""
        result = fourier_transform(cantor, 2, 10)
        assert result.value == 0
        assert result.tail_bound == 0

    def test_cosine_product(self, cantor):
        """Test |mu^(1)| against prod cos(pi / 4^j)"""
        expected = math.prod(math.cos(math.pi / 4 ** j) for j in range(1, 30))
        result = fourier_transform(cantor, 1, 30)
        assert result.magnitude == pytest.approx(expected, abs=1e-12)
        assert result.tail_bound < 1e-12

    def test_tail_bound_covers_truncation(self, cantor):
        """Test that a short truncation stays within its tail bound"""
        xi = Fraction(37, 3)
        short = fourier_transform(cantor, xi, 3)
        long = fourier_transform(cantor, xi, 40)
        assert abs(short.value - long.value) <= short.tail_bound + 1e-12

    def test_truncation_must_be_positive(self, cantor):
        """Test that K = 0 is rejected"""
        with pytest.raises(ValidationError):
            fourier_transform(cantor, 1, 0)

    def test_tail_ratio(self, cantor):
        """Test sup (q - 1)/b for periodic systems"""
        assert tail_ratio(cantor) == Fraction(1, 4)
        assert tail_ratio(preset_system("mixed")) == Fraction(1, 3)

    # ========================================
    # SPARSE TERM TESTS
    # ========================================

    def test_terms_match_dense(self, cantor):
        """Test that the sparse evaluator agrees with the dense one"""
        terms = [(1, 1), (3, 1), (4, 2)]
        xi = Fraction(37, 100) + 2 + 32 + 2 * 128
        sparse = fourier_transform_terms(cantor, terms, Fraction(37, 100), K=40)
        dense = fourier_transform(cantor, xi, 44)
        assert abs(sparse.value - dense.value) < 1e-9

    def test_terms_huge_frequency(self, cantor):
        """Test evaluation at 2 B_500 + 0.37 without dense factors"""
        result = fourier_transform_terms(cantor, [(501, 2)], Fraction(37, 100), K=40)
        base = fourier_transform(cantor, Fraction(37, 100), 40)
        assert 0 <= result.magnitude <= 1
        assert result.tail_bound < 1e-6
        # Factors 1..500 see the same phase as at 0.37
        assert result.magnitude <= base.magnitude + 1e-6

    def test_tiny_phases(self, cantor):
        """Test that phases below double precision give factors of 1"""
        result = fourier_transform(cantor, Fraction(1, 4 ** 600), 40)
        assert result.value == pytest.approx(1.0, abs=1e-12)

    def test_terms_lacunary_high_index(self, cantor):
        """Test lambda_600 of the lacunary spectrum, whose top factor has phase ~ 4^-600"""
        terms = lacunary_spectrum(cantor).terms(600)
        assert terms[-1] == (610, 2)
        xi0 = Fraction(37, 100)
        full = fourier_transform_terms(cantor, terms, xi0, K=40)
        lower = fourier_transform_terms(cantor, terms[:-1], xi0, K=40)
        # Adding B_610 only changes the factors above level 610, which then see 4^-m
        jump = fourier_transform(cantor, 1, 40).magnitude
        assert full.magnitude == pytest.approx(lower.magnitude * jump, abs=1e-9)

    def test_terms_empty_is_origin_shift(self, cantor):
        """Test that no terms gives mu^(xi0)"""
        xi0 = Fraction(1, 3)
        assert abs(fourier_transform_terms(cantor, [], xi0, K=30).value
                   - fourier_transform(cantor, xi0, 30).value) < 1e-12


@pytest.mark.unit
class TestZeroSet:
    """Test suite for zero_set_member"""

    @pytest.fixture
    def cantor(self):
        return preset_system("cantor")

    # ========================================
    # MEMBERSHIP TESTS
    # ========================================

    def test_members(self, cantor):
        """Test 2 * odd, 8 * odd and 32 * odd"""
        assert zero_set_member(cantor, 2) == (True, 0)
        assert zero_set_member(cantor, 6) == (True, 0)
        assert zero_set_member(cantor, 8) == (True, 1)
        assert zero_set_member(cantor, -32) == (True, 2)

    def test_non_members(self, cantor):
        """Test odd numbers and 4 * odd"""
        assert zero_set_member(cantor, 3) == (False, None)
        assert zero_set_member(cantor, 4) == (False, None)
        assert zero_set_member(cantor, 16) == (False, None)

    def test_level_restriction(self, cantor):
        """Test that zeros of mu_n^ need k < n"""
        assert zero_set_member(cantor, 32, max_level=3) == (True, 2)
        assert zero_set_member(cantor, 32, max_level=2) == (False, None)

    def test_zero_rejected(self, cantor):
        """Test that 0 is never a zero"""
        with pytest.raises(ValidationError):
            zero_set_member(cantor, 0)

    def test_members_vanish_numerically(self, cantor):
        """Test that members give an exactly vanishing product"""
        for xi in (2, 6, 8, 40, 32 * 3):
            assert fourier_transform(cantor, xi, 12).value == 0


@pytest.mark.unit
class TestNonDecay:
    """Test suite for the non-decay witness"""

    @pytest.fixture
    def cantor(self):
        return preset_system("cantor")

    def test_probe_constant_magnitude(self, cantor):
        """Test that |mu^(4^k)| is the same value for k <= 20"""
        points = fourier_nondecay_probe(cantor, 20)
        magnitudes = [p.magnitude for p in points]
        assert len(points) == 20
        assert max(magnitudes) - min(magnitudes) < 1e-6
        assert min(magnitudes) >= 0.65

    def test_scaled_support_below_one(self, cantor):
        """Test the exact support bound for k <= 20"""
        for k in range(0, 21):
            bound = scaled_support_max(cantor, k, 30)
            assert bound.below_one
            assert bound.bound >= Fraction(1, 3)

    def test_mixed_support_below_one(self):
        """Test the support bound on b = (4, 6), q = (2, 3)"""
        mixed = preset_system("mixed")
        assert all(scaled_support_max(mixed, k, 30).below_one for k in range(10))
