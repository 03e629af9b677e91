"""
Unit Tests for Mixed Radix Words
Tests index encoding, decoding and word depth
"""

import pytest
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from lab_errors import ValidationError
from mixed_radix import MixedRadixWord, decode_word, encode_index, index_depth
from moran_system import preset_system


@pytest.mark.unit
class TestMixedRadix:
    """Test suite for mixed_radix"""

    @pytest.fixture
    def cantor(self):
        return preset_system("cantor")

    @pytest.fixture
    def mixed(self):
        return preset_system("mixed")

    # ========================================
    # ENCODING TESTS
    # ========================================

    def test_encode_binary(self, cantor):
        """Test that q = 2 gives binary digits, least significant first"""
        assert encode_index(cantor, 5).digits == (1, 0, 1)
        assert encode_index(cantor, 8).digits == (0, 0, 0, 1)

    def test_encode_mixed(self, mixed):
        """Test radices 2, 3, 2, 3, ..."""
        assert encode_index(mixed, 5).digits == (1, 2)
        assert encode_index(mixed, 6).digits == (0, 0, 1)

    def test_last_digit_nonzero(self, mixed):
        """Test that encoded words never end in zero"""
        for n in range(1, 200):
            assert encode_index(mixed, n).last_nonzero

    def test_encode_rejects_zero(self, cantor):
        """Test that index 0 has no word"""
        with pytest.raises(ValidationError):
            encode_index(cantor, 0)

    # ========================================
    # DECODING TESTS
    # ========================================

    def test_decode_inverts_encode(self, mixed):
        """Test decode(encode(n)) = n"""
        for n in (1, 2, 5, 6, 35, 36, 1000):
            assert decode_word(mixed, encode_index(mixed, n)) == n

    def test_decode_rejects_trailing_zero(self, cantor):
        """Test that a word ending in zero is rejected"""
        with pytest.raises(ValidationError):
            decode_word(cantor, MixedRadixWord((1, 0)))

    def test_decode_rejects_out_of_range_digit(self, cantor):
        """Test that digit 2 is rejected when q_1 = 2"""
        with pytest.raises(ValidationError):
            decode_word(cantor, MixedRadixWord((2,)))

    def test_decode_rejects_empty_word(self, cantor):
        """Test that the empty word is rejected"""
        with pytest.raises(ValidationError):
            decode_word(cantor, MixedRadixWord(()))

    # ========================================
    # DEPTH TESTS
    # ========================================

    def test_index_depth(self, cantor):
        """Test k_n = smallest k with n < Q_k"""
        assert index_depth(cantor, 1) == 1
        assert index_depth(cantor, 3) == 2
        assert index_depth(cantor, 4) == 3
        assert index_depth(cantor, 4095) == 12

    def test_nonzero_positions(self, cantor):
        """Test the sparse view of a word"""
        assert list(encode_index(cantor, 5).nonzero_positions()) == [(1, 1), (3, 1)]
