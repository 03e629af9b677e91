"""
Property Tests for the Moran Lab
Randomized checks of encoding, zero sets, transforms, window counts and lacunary spectra
"""

import pytest
import sys
import os
from fractions import Fraction

from hypothesis import given, settings, strategies as st

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dimension_lab import window_counts
from measure_engine import fourier_transform, zero_set_member
from mixed_radix import decode_word, encode_index, index_depth
from moran_system import preset_system
from spectrum_factory import canonical_spectrum, lacunary_spectrum

CANTOR = preset_system("cantor")
MIXED = preset_system("mixed")
CANONICAL = canonical_spectrum(CANTOR)
LACUNARY = lacunary_spectrum(CANTOR)

PROPERTY_SETTINGS = settings(max_examples=50, deadline=None)


@pytest.mark.property
class TestProperties:
    """Test suite for randomized invariants"""

    # ========================================
    # ENCODING PROPERTIES
    # ========================================

    @PROPERTY_SETTINGS
    @given(st.integers(min_value=1, max_value=10 ** 9))
    def test_encode_decode(self, n):
        """Test decode(encode(n)) = n on the mixed system"""
        word = encode_index(MIXED, n)
        assert decode_word(MIXED, word) == n
        assert word.depth == index_depth(MIXED, n)

    # ========================================
    # ZERO SET PROPERTIES
    # ========================================

    @PROPERTY_SETTINGS
    @given(st.integers(min_value=1, max_value=10 ** 30))
    def test_zero_set_symmetric(self, xi):
        """Test that xi and -xi are zeros together"""
        assert zero_set_member(CANTOR, xi) == zero_set_member(CANTOR, -xi)

    @PROPERTY_SETTINGS
    @given(st.integers(min_value=0, max_value=4095), st.integers(min_value=0, max_value=4095))
    def test_canonical_differences_are_zeros(self, n, m):
        """Test that differences of canonical frequencies lie in the zero set"""
        if n == m:
            return
        member, _ = zero_set_member(CANTOR, CANONICAL.lambda_at(n) - CANONICAL.lambda_at(m))
        assert member

    # ========================================
    # TRANSFORM PROPERTIES
    # ========================================

    @PROPERTY_SETTINGS
    @given(st.fractions(min_value=-1000, max_value=1000, max_denominator=10 ** 6))
    def test_transform_bounded(self, xi):
        """Test |mu^(xi)| <= 1"""
        assert fourier_transform(CANTOR, Fraction(xi), 20).magnitude <= 1 + 1e-12

    # ========================================
    # COUNTING PROPERTIES
    # ========================================

    @PROPERTY_SETTINGS
    @given(st.sets(st.integers(min_value=-500, max_value=500), min_size=1, max_size=60),
           st.integers(min_value=1, max_value=200))
    def test_sweep_matches_brute_force(self, values, h):
        """Test the two-pointer sweep against direct window counting"""
        points = sorted(values)
        (profile,) = window_counts(points, [h])
        brute = max(sum(1 for p in points if x <= p <= x + h) for x in points)
        assert profile.max_count == brute

    @PROPERTY_SETTINGS
    @given(st.sets(st.integers(min_value=0, max_value=2000), min_size=2, max_size=80),
           st.sets(st.integers(min_value=0, max_value=2000), min_size=2, max_size=80),
           st.lists(st.integers(min_value=1, max_value=500), min_size=1, max_size=6, unique=True))
    def test_counts_monotone_and_stable(self, left, right, scales):
        """Test count(A) <= count(A u B) <= count(A) + count(B) at every scale"""
        scales = sorted(scales)
        union = window_counts(sorted(left | right), scales)
        for a, b, c in zip(window_counts(sorted(left), scales),
                           window_counts(sorted(right), scales), union):
            assert a.max_count <= c.max_count
            assert b.max_count <= c.max_count
            assert c.max_count <= a.max_count + b.max_count

    # ========================================
    # LACUNARY PROPERTIES
    # ========================================

    @PROPERTY_SETTINGS
    @given(st.integers(min_value=1, max_value=200))
    def test_lacunary_sandwich(self, n):
        """Test B_{k+n} <= lambda_n <= 2 B_{k+n} for identity shifts"""
        scale = CANTOR.B(index_depth(CANTOR, n) + n)
        assert scale <= LACUNARY.lambda_at(n) <= 2 * scale
