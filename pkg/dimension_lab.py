#!/usr/bin/env python3
"""
Dimension Lab
Counting estimates of Beurling and entropy dimensions

Features:
- window_counts: exact maximal window occupancy via a two-pointer sweep
- beurling_estimate: running-sup of log(count)/log(h) over the largest
  scales plus a least-squares slope
- beurling_formula_ims: closed-form value for integer Moran sets
- lacunary_check: ratio scan for b-lacunary sequences
- entropy_estimate: dyadic-partition entropy of an atomic measure
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from integer_moran import IntegerMoranData, validate_cfd
from lab_errors import ValidationError
from logger_config import get_dimension_logger
from measure_engine import AtomicMeasure
from moran_system import ExactLogRatio

logger = get_dimension_logger()

DEFAULT_HEADLINE_FRACTION = 0.25
DEFAULT_ENTROPY_MARGIN = 16


# ==================== WINDOW COUNTS ====================

@dataclass
class WindowCountProfile:
    """Largest number of points in a closed window [x, x + h]"""
    window_length: int
    max_count: int
    argmax_window: Optional[Tuple[int, int]]


def _sweep(points: Sequence[int], h: int) -> WindowCountProfile:
    best, best_start = 0, None
    right = 0
    for left, start in enumerate(points):
        if right < left:
            right = left
        while right < len(points) and points[right] - start <= h:
            right += 1
        if right - left > best:
            best, best_start = right - left, start
    window = (best_start, best_start + h) if best_start is not None else None
    return WindowCountProfile(h, best, window)


def window_counts(points: Sequence[int], scales: Sequence[int],
                  threads: int = 1) -> List[WindowCountProfile]:
    """
    Maximal window occupancy for each scale

    Windows are anchored at set points; moving a window right until its
    left end hits a point never loses a point, so this is exact.

    Args:
        points: Sorted, distinct integers
        scales: Window lengths h
        threads: Worker threads (one scale per task)

    Returns:
        One WindowCountProfile per scale, in input order
    """
    if any(b <= a for a, b in zip(points, points[1:])):
        raise ValidationError("points must be sorted and distinct")
    if threads > 1 and len(scales) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda h: _sweep(points, h), scales))
    return [_sweep(points, h) for h in scales]


# ==================== BEURLING ESTIMATES ====================

@dataclass
class ScaleSample:
    h: int
    max_count: int
    log_ratio: float


@dataclass
class DimensionEstimate:
    """Counting-based dimension value with its per-scale table"""
    value: float
    samples: List[ScaleSample]
    method: str                     # running-sup | formula
    scale_source: str               # dyadic | natural | custom | levels
    slope: Optional[float] = None
    closed_form: Optional[float] = None
    exact: Optional[ExactLogRatio] = None
    headline_scales: List[int] = field(default_factory=list)

    def __str__(self):
        extra = f", closed form {self.closed_form:.6f}" if self.closed_form is not None else ""
        return f"DimensionEstimate({self.method}={self.value:.6f} on {self.scale_source} scales{extra})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "method": self.method,
            "scale_source": self.scale_source,
            "slope": self.slope,
            "closed_form": self.closed_form,
            "exact": str(self.exact) if self.exact else None,
            "scales": len(self.samples),
        }

    def rows(self) -> List[Tuple[str, int, float]]:
        """CSV rows (h, max_count, log_ratio)"""
        return [(str(s.h), s.max_count, s.log_ratio) for s in self.samples]


def dyadic_scales(span: int, max_scales: int = 48, top_octaves: int = 3) -> List[int]:
    """
    Powers of two up to the span, thinned to at most max_scales

    The top `top_octaves` consecutive octaves are always kept.
    """
    if span < 2:
        return []
    top = span.bit_length() - 1
    exponents = list(range(1, top + 1))
    if len(exponents) > max_scales:
        keep = exponents[-top_octaves:]
        rest = exponents[:-top_octaves]
        stride = math.ceil(len(rest) / (max_scales - top_octaves))
        exponents = rest[::stride] + keep
    return [1 << e for e in exponents]


def _headline_count(n: int, fraction: float) -> int:
    return max(1, math.ceil(n * fraction))


def beurling_estimate(points: Sequence[int], scales: Sequence[int],
                      headline_fraction: float = DEFAULT_HEADLINE_FRACTION,
                      scale_source: str = "custom", threads: int = 1) -> DimensionEstimate:
    """
    Counting estimate of the Beurling dimension

    Args:
        points: Sorted, distinct integers (at least 2)
        scales: Increasing window lengths, each >= 2 and <= the span
        headline_fraction: Share of the largest scales feeding the headline
        scale_source: Label recorded in the estimate
        threads: Worker threads for the window sweep

    Returns:
        DimensionEstimate with the running-sup headline and the slope
    """
    if len(points) < 2:
        raise ValidationError("need at least two points")
    if not scales:
        raise ValidationError("need at least one scale")
    if any(h < 2 for h in scales):
        raise ValidationError("scales below 2 are degenerate")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValidationError("scales must be strictly increasing")
    span = points[-1] - points[0]
    if scales[-1] > span:
        raise ValidationError(f"largest scale {scales[-1]} exceeds the span {span}")

    profiles = window_counts(points, scales, threads)
    samples = [
        ScaleSample(p.window_length, p.max_count, math.log(p.max_count) / math.log(p.window_length))
        for p in profiles
    ]

    top = samples[-_headline_count(len(samples), headline_fraction):]
    value = max(s.log_ratio for s in top)

    slope = None
    if len(samples) >= 2:
        xs = np.array([math.log(s.h) for s in samples])
        ys = np.array([math.log(s.max_count) for s in samples])
        slope = float(np.polyfit(xs, ys, 1)[0])

    logger.debug(f"Beurling estimate {value:.6f} over {len(samples)} {scale_source} scales")
    return DimensionEstimate(value, samples, "running-sup", scale_source, slope,
                             headline_scales=[s.h for s in top])


def beurling_formula_ims(data: IntegerMoranData, depth: int,
                         headline_fraction: float = DEFAULT_HEADLINE_FRACTION) -> DimensionEstimate:
    """
    Closed-form Beurling dimension of an integer Moran set

        limsup_k log(m_1...m_k) / log(m_k t_k n_1...n_{k-1})

    sampled over k <= depth (headline over the largest levels), exact when
    the data is periodic from some point on.
    """
    report = validate_cfd(data, depth)
    if not report:
        raise ValidationError(f"separation condition fails at k={report.failure_k}",
                              witness=report.failure_k)

    samples = []
    count = 1
    for k in range(1, depth + 1):
        count *= data.m_seq[k - 1]
        h = data.m_seq[k - 1] * data.step(k)
        if h < 2:
            continue
        samples.append(ScaleSample(h, count, math.log(count) / math.log(h)))
    if not samples:
        raise ValidationError("no level with a denominator >= 2")

    top = samples[-_headline_count(len(samples), headline_fraction):]
    value = max(s.log_ratio for s in top)

    exact = None
    if data.period is not None and sum(data.period) <= data.depth:
        start, period = data.period
        m_product = math.prod(data.m_seq[start:start + period])
        n_product = math.prod(data.n_seq[start:start + period])
        if m_product == 1:
            value = 0.0
        else:
            exact = ExactLogRatio(m_product, n_product)
            value = exact.value

    return DimensionEstimate(value, samples, "formula", "levels", closed_form=value, exact=exact,
                             headline_scales=[s.h for s in top])


# ==================== LACUNARITY ====================

@dataclass
class LacunaryReport:
    lacunary: bool
    checked: int
    first_violation: Optional[int] = None     # index n with |a_n| < b |a_{n-1}|
    min_ratio: Optional[float] = None


def lacunary_check(sequence: Sequence[int], b: float) -> LacunaryReport:
    """
    Verify a_0 = 0, |a_1| >= b and |a_{n+1}| >= b |a_n|

    Args:
        sequence: a_0, a_1, ... in index order
        b: Ratio bound (> 1)
    """
    if b <= 1:
        raise ValidationError(f"lacunarity ratio must exceed 1, got {b}")
    if not sequence or sequence[0] != 0:
        raise ValidationError("a lacunary sequence starts at a_0 = 0")

    report = LacunaryReport(True, len(sequence) - 1)
    if len(sequence) < 2:
        return report
    if abs(sequence[1]) < b:
        return LacunaryReport(False, report.checked, 1)

    ratios = []
    for n in range(2, len(sequence)):
        prev, cur = abs(sequence[n - 1]), abs(sequence[n])
        if prev:
            ratios.append(cur / prev)
        if cur < b * prev:
            report = LacunaryReport(False, report.checked, n)
            break
    report.min_ratio = min(ratios) if ratios else None
    return report


# ==================== ENTROPY ====================

@dataclass
class EntropyRow:
    n: int
    entropy: float
    ratio: float
    occupied_cells: int


def entropy_estimate(measure: AtomicMeasure, levels: Sequence[int],
                     margin: int = DEFAULT_ENTROPY_MARGIN) -> List[EntropyRow]:
    """
    H_n / (n log 2) for the dyadic partitions of [0, 1)

    Args:
        measure: Atomic approximation mu_m
        levels: Dyadic levels n with 2^n * margin <= B_m
        margin: Resolution margin between the partition and the atoms

    Returns:
        One EntropyRow per level
    """
    rows = []
    total = measure.size
    for n in levels:
        if n < 1:
            raise ValidationError(f"dyadic level must be >= 1, got {n}")
        if (1 << n) * margin > measure.denominator:
            raise ValidationError(
                f"dyadic level {n} is too fine for level-{measure.level} atoms "
                f"(need 2^{n} * {margin} <= {measure.denominator})"
            )
        if measure.numerators.dtype == object:
            cells = np.array([(int(a) << n) // measure.denominator for a in measure.numerators])
        else:
            cells = (measure.numerators.astype(object) * (1 << n)) // measure.denominator
            cells = cells.astype(np.int64)
        _, counts = np.unique(cells, return_counts=True)
        masses = counts / total
        entropy = float(-(masses * np.log(masses)).sum())
        rows.append(EntropyRow(n, entropy, entropy / (n * math.log(2)), len(counts)))
    return rows
