"""
Unit Tests for Dimension Lab
Tests window counts, Beurling estimates, the integer Moran formula, lacunarity and entropy
"""

import random
import pytest
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dimension_lab import (
    beurling_estimate, beurling_formula_ims, dyadic_scales, entropy_estimate, lacunary_check,
    window_counts
)
from integer_moran import IntegerMoranData, integer_moran_set, natural_scales
from lab_errors import ValidationError
from measure_engine import level_measure
from moran_system import SequenceSpec, preset_system
from spectrum_factory import (
    SignWord, canonical_spectrum, intermediate_spectrum, lacunary_spectrum, sign_word_spectrum
)

SMALL_SET = [0, 1, 4, 5, 16, 17, 20, 21]


def periodic_data(n, m, t, depth):
    return IntegerMoranData.from_specs(
        SequenceSpec.periodic(*n), SequenceSpec.periodic(*m), SequenceSpec.periodic(*t), depth
    )


def random_ims(rng, depth):
    """Non-constant data with entries <= 6 that satisfies the separation condition"""
    while True:
        n, m, t = [], [], [rng.randint(1, 6)]
        spread, scale = 0, 1
        for k in range(1, depth + 1):
            n.append(rng.randint(3, 6))
            m.append(rng.randint(2, 3))
            spread += (m[-1] - 1) * t[-1] * scale
            scale *= n[-1]
            if k < depth:
                # 6 n_1...n_k always clears the spread since n_k >= 3
                t.append(rng.choice([v for v in range(1, 7) if v * scale > spread]))
        if len(set(n)) > 1 or len(set(m)) > 1 or len(set(t)) > 1:
            return IntegerMoranData(tuple(n), tuple(m), tuple(t))


@pytest.mark.unit
class TestWindowCounts:
    """Test suite for window_counts and dyadic_scales"""

    # ========================================
    # SWEEP TESTS
    # ========================================

    def test_small_set(self):
        """Test counts and witness windows on {0, 1, 4, 5, 16, 17, 20, 21}"""
        five, four, sixteen = window_counts(SMALL_SET, [5, 4, 16])
        assert (five.max_count, five.argmax_window) == (4, (0, 5))
        assert four.max_count == 3
        assert sixteen.max_count == 5

    def test_threads_match_serial(self):
        """Test that threaded sweeps give the same counts"""
        points = canonical_spectrum(preset_system("cantor")).level_points(8)
        scales = [2, 10, 42, 170, 682]
        serial = [p.max_count for p in window_counts(points, scales)]
        parallel = [p.max_count for p in window_counts(points, scales, threads=3)]
        assert serial == parallel

    def test_unsorted_rejected(self):
        """Test that points must be sorted and distinct"""
        with pytest.raises(ValidationError):
            window_counts([0, 5, 4], [2])
        with pytest.raises(ValidationError):
            window_counts([0, 4, 4], [2])

    # ========================================
    # SCALE TESTS
    # ========================================

    def test_dyadic_scales(self):
        """Test powers of two up to the span"""
        assert dyadic_scales(1000) == [2, 4, 8, 16, 32, 64, 128, 256, 512]
        assert dyadic_scales(1) == []

    def test_dyadic_scales_thinned(self):
        """Test that thinning keeps the top octaves"""
        assert dyadic_scales(2 ** 20, max_scales=5) == [2, 1024, 2 ** 18, 2 ** 19, 2 ** 20]


@pytest.mark.unit
class TestBeurlingEstimate:
    """Test suite for beurling_estimate and beurling_formula_ims"""

    # ========================================
    # ESTIMATE TESTS
    # ========================================

    def test_canonical_natural_scales(self):
        """Test that the level-12 canonical set estimates 1/2"""
        spectrum = canonical_spectrum(preset_system("cantor"))
        points = spectrum.level_points(12)
        estimate = beurling_estimate(points, spectrum.natural_scales(12), scale_source="natural")
        assert estimate.value == pytest.approx(0.5, abs=0.05)
        assert estimate.slope == pytest.approx(0.5, abs=0.05)
        assert estimate.headline_scales[-1] == points[-1]

    def test_sign_word_natural_scales(self):
        """Test that alternating signs keep the counting dimension 1/2"""
        spectrum = sign_word_spectrum(preset_system("cantor"), SignWord.periodic(1, -1))
        points = spectrum.level_points(10)
        estimate = beurling_estimate(points, spectrum.natural_scales(10), scale_source="natural")
        assert estimate.value == pytest.approx(0.5, abs=0.05)
        assert estimate.headline_scales[-1] == points[-1] - points[0]

    @pytest.mark.parametrize("points, scales", [
        ([0], [2]),
        (SMALL_SET, []),
        (SMALL_SET, [1, 4]),
        (SMALL_SET, [4, 4]),
        (SMALL_SET, [4, 64]),
    ])
    def test_invalid_inputs(self, points, scales):
        """Test rejected point sets and scale lists"""
        with pytest.raises(ValidationError):
            beurling_estimate(points, scales)

    def test_rows(self):
        """Test the CSV rows of an estimate"""
        estimate = beurling_estimate(SMALL_SET, [4, 16])
        assert [row[:2] for row in estimate.rows()] == [("4", 3), ("16", 5)]

    # ========================================
    # FORMULA TESTS
    # ========================================

    def test_formula_exact(self):
        """Test log 2 / log 4 for n = 4, m = 2, t = 1"""
        estimate = beurling_formula_ims(periodic_data((4,), (2,), (1,), 8), 8)
        assert estimate.value == pytest.approx(0.5, abs=1e-12)
        assert estimate.exact is not None

    def test_formula_single_digit(self):
        """Test that m = 1 gives dimension 0"""
        estimate = beurling_formula_ims(periodic_data((4,), (1,), (1,), 8), 8)
        assert estimate.value == 0.0

    def test_formula_invalid_data(self):
        """Test that the separation condition is enforced"""
        with pytest.raises(ValidationError):
            beurling_formula_ims(IntegerMoranData((2, 2), (3, 3), (1, 1)), 2)

    @pytest.mark.slow
    def test_estimate_matches_formula(self):
        """Test counting estimates against the formula on randomized non-constant instances"""
        rng = random.Random(20240501)
        close = 0
        for _ in range(50):
            data = random_ims(rng, 10)
            points = integer_moran_set(data, 10)
            scales = natural_scales(data, 10)
            formula = beurling_formula_ims(data, 10)
            estimate = beurling_estimate(points, scales, scale_source="natural")
            if abs(estimate.value - formula.value) <= 0.1:
                close += 1

            full = [p.max_count for p in window_counts(points, scales)]
            coarse = integer_moran_set(data, 9)
            inner = [p.max_count for p in window_counts(coarse, scales)]
            outer = sorted(set(points) - set(coarse))
            rest = [p.max_count for p in window_counts(outer, scales)]
            assert all(a <= b for a, b in zip(inner, full))
            assert all(c <= a + b for a, b, c in zip(inner, rest, full))
        assert close >= 48

    @pytest.mark.slow
    def test_lacunary_estimate(self):
        """Test that the first 10001 lacunary frequencies estimate near 0"""
        points = lacunary_spectrum(preset_system("cantor")).points(10 ** 4)
        scales = dyadic_scales(points[-1])
        estimate = beurling_estimate(points, scales, scale_source="dyadic")
        assert estimate.value <= 0.1
        # Counts stay near 10^4 while h doubles
        top = [s.log_ratio for s in estimate.samples[-3:]]
        assert top[0] >= top[1] >= top[2]

    @staticmethod
    def _thinned_estimate(t):
        spectrum = intermediate_spectrum(preset_system("cantor"), t)
        natural = spectrum.natural_scales(16)
        points = sorted(spectrum.points_within(10 ** 5, natural[-1] << 20))
        scales = [h for h in natural if h <= points[-1] - points[0]]
        return beurling_estimate(points, scales, scale_source="natural")

    @pytest.mark.slow
    def test_intermediate_estimate(self):
        """Test that the t = 0.25 spectrum estimates its target"""
        assert abs(self._thinned_estimate("0.25").value - 0.25) <= 0.07

    @pytest.mark.slow
    def test_intermediate_estimate_small_target(self):
        """Test the t = 0.1 estimate (few regular points below the index cap)"""
        # 8 regular and 6 irregular frequencies share the largest natural window
        assert 0.1 <= self._thinned_estimate("0.1").value <= 0.2


@pytest.mark.unit
class TestLacunaryAndEntropy:
    """Test suite for lacunary_check and entropy_estimate"""

    # ========================================
    # LACUNARITY TESTS
    # ========================================

    def test_lacunary_sequence(self):
        """Test a geometric sequence"""
        report = lacunary_check([0, 3, 9, 27], 3)
        assert report.lacunary
        assert report.min_ratio == pytest.approx(3.0)

    def test_violation(self):
        """Test that 5 < 3 * 3 is reported at index 2"""
        report = lacunary_check([0, 3, 5], 3)
        assert not report.lacunary
        assert report.first_violation == 2

    def test_first_term_too_small(self):
        """Test that |a_1| >= b is required"""
        assert lacunary_check([0, 1], 2).first_violation == 1

    def test_bad_inputs(self):
        """Test the ratio and a_0 preconditions"""
        with pytest.raises(ValidationError):
            lacunary_check([0, 3], 1)
        with pytest.raises(ValidationError):
            lacunary_check([1, 3], 2)

    def test_lacunary_spectrum_prefix(self):
        """Test that identity shifts give a 2-lacunary index sequence"""
        points = lacunary_spectrum(preset_system("cantor")).points(200)
        assert lacunary_check(points, 2).lacunary

    # ========================================
    # ENTROPY TESTS
    # ========================================

    def test_entropy_ratio(self):
        """Test H_16 / (16 log 2) = 1/2 for mu_12"""
        measure = level_measure(preset_system("cantor"), 12)
        (row,) = entropy_estimate(measure, [16])
        assert row.occupied_cells == 256
        assert row.ratio == pytest.approx(0.5, abs=1e-12)

    def test_entropy_too_fine(self):
        """Test that partitions finer than the atoms allow are refused"""
        measure = level_measure(preset_system("cantor"), 4)
        with pytest.raises(ValidationError):
            entropy_estimate(measure, [8])
