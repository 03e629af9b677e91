#!/usr/bin/env python3
"""
Measure Engine
Finite-level approximations, Fourier transforms and exact zero sets

Features:
- level_measure: the level-n atomic measure mu_n with exact atoms a / B_n
- fourier_transform: truncated product formula with a certified tail bound
- fourier_transform_terms: the same at xi0 + sum c_j rho_j for huge sparse
  frequencies (lacunary spectra), skipping factors with negligible phase
- zero_set_member: exact integer test for the zeros of the transform
- scaled_support_max / fourier_nondecay_probe: the non-decay witness
"""

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import psutil

from lab_errors import ValidationError
from logger_config import get_measure_logger
from moran_system import MoranSystem

logger = get_measure_logger()

DEFAULT_MAX_LEVEL = 12

# Atom arrays may use at most this share of the available memory
MEMORY_SHARE = 0.25

# A factor is skipped when its phase |xi| / B_{k-1} is below 2^-60
NEGLIGIBLE_BITS = 60

INT64_SAFE = 2 ** 62

# Below this |x| the factor is 1 - (q^2 - 1)(pi x)^2 / 6 to double precision
SMALL_PHASE = 1e-8

Rational = Union[int, Fraction]


# ==================== ATOMIC MEASURES ====================

@dataclass
class AtomicMeasure:
    """
    Level-n approximation mu_n

    Atoms are numerators over the common denominator B_n, sorted ascending;
    every atom carries weight 1/Q_n.
    """
    level: int
    numerators: np.ndarray
    denominator: int

    @property
    def weight(self) -> Fraction:
        return Fraction(1, len(self.numerators))

    @property
    def size(self) -> int:
        return len(self.numerators)

    @property
    def atoms(self) -> List[Fraction]:
        return [Fraction(int(a), self.denominator) for a in self.numerators]

    def rows(self) -> Iterator[Tuple[int, int, str]]:
        """CSV rows (numerator, denominator, weight)"""
        weight = str(self.weight)
        for a in self.numerators:
            yield int(a), self.denominator, weight

    def transform(self, xi: Rational) -> complex:
        """Direct atomic sum (1/Q_n) sum_a exp(-2 pi i a xi)"""
        xi = Fraction(xi)
        den = self.denominator * xi.denominator
        phases = np.array(
            [(int(a) * xi.numerator) % den / den for a in self.numerators], dtype=np.float64
        )
        return complex(np.exp(-2j * np.pi * phases).mean())


def level_measure(system: MoranSystem, n: int, max_level: int = DEFAULT_MAX_LEVEL) -> AtomicMeasure:
    """
    Materialize mu_n = delta_{D_1/B_1} * ... * delta_{D_n/B_n}

    Args:
        system: Moran system
        n: Level (1 <= n <= max_level)
        max_level: Materialization cap

    Returns:
        AtomicMeasure with Q_n atoms
    """
    if not 1 <= n <= max_level:
        raise ValidationError(f"level must be in 1..{max_level}, got {n}")

    count = system.Q(n)
    big = system.B(n) >= INT64_SAFE
    bytes_needed = count * (64 if big else 8)
    available = psutil.virtual_memory().available
    if bytes_needed > MEMORY_SHARE * available:
        raise ValidationError(
            f"level {n} needs {count} atoms (~{bytes_needed / 2**20:.0f} MiB), "
            f"more than {MEMORY_SHARE:.0%} of available memory"
        )

    dtype = object if big else np.int64
    numerators = np.zeros(1, dtype=dtype)
    for k in range(1, n + 1):
        digits = np.arange(system.q(k), dtype=np.int64).astype(dtype)
        # a_k = a_{k-1} b_k + d_k keeps the atoms sorted
        numerators = (numerators[:, None] * system.b(k) + digits[None, :]).ravel()

    logger.debug(f"Materialized level {n}: {count} atoms over {system.B(n)}")
    return AtomicMeasure(n, numerators, system.B(n))


# ==================== FOURIER TRANSFORM ====================

@dataclass
class FourierValue:
    """Truncated transform value with a bound on the neglected factors"""
    value: complex
    truncation: int
    tail_bound: float

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    def __str__(self):
        return f"FourierValue(|value|={self.magnitude:.9f}, K={self.truncation}, tail<={self.tail_bound:.3e})"


@lru_cache(maxsize=None)
def tail_ratio(system: MoranSystem) -> Fraction:
    """sup_n (q_n - 1)/b_n; exact for eventually periodic systems, else the universal 1/2"""
    structure = system.periodic_structure()
    if structure is None:
        return Fraction(1, 2)
    return max(Fraction(system.q(n) - 1, system.b(n)) for n in range(1, sum(structure) + 1))


def _tail_sum(system: MoranSystem, magnitude: Fraction, level: int) -> float:
    """
    Bound on sum_{k>level} |1 - factor_k| for a frequency of the given magnitude

    Uses |1 - factor_k| <= pi (q_k - 1) |xi| / B_k and b_k >= 4.
    """
    if magnitude == 0:
        return 0.0
    bound = tail_ratio(system) * Fraction(4, 3) * magnitude / system.B(level)
    return math.pi * float(bound)


def _factor(q: int, num: int, den: int) -> complex:
    """
    (1/q) sum_{d<q} exp(-2 pi i d x) at x = num/den (period 1 in x)

    Evaluated as exp(-pi i (q-1) x) sin(pi q x) / (q sin(pi x)) with x folded
    into (-1/2, 1/2]; phases too small for a double use the quadratic limit.
    """
    num %= den
    if num == 0:
        return 1.0 + 0j
    if (q * num) % den == 0:
        return 0j
    if 2 * num > den:
        num -= den
    x = num / den
    rotation = cmath.exp(-1j * math.pi * (q - 1) * x)
    if abs(x) < SMALL_PHASE:
        return rotation * (1 - (q * q - 1) * (math.pi * x) ** 2 / 6)
    return rotation * math.sin(math.pi * q * x) / (q * math.sin(math.pi * x))


def fourier_transform(system: MoranSystem, xi: Rational, K: int) -> FourierValue:
    """
    mu^(xi) truncated to K product factors

    Args:
        system: Moran system
        xi: Exact rational frequency
        K: Number of factors (K >= 1)

    Returns:
        FourierValue; value is exactly 0 when a factor vanishes
    """
    if K < 1:
        raise ValidationError(f"truncation must be >= 1, got {K}")
    xi = Fraction(xi)
    a, c = xi.numerator, xi.denominator

    value = 1.0 + 0j
    for k in range(1, K + 1):
        den = c * system.B(k)
        factor = _factor(system.q(k), a % den, den)
        if factor == 0:
            return FourierValue(0j, K, 0.0)
        value *= factor

    tail = min(2.0, _tail_sum(system, abs(xi), K))
    return FourierValue(value, K, tail)


def fourier_transform_terms(
    system: MoranSystem,
    terms: Sequence[Tuple[int, int]],
    xi0: Rational = 0,
    K: int = 40
) -> FourierValue:
    """
    mu^(xi0 + sum c_j rho_j) for a sparse term list [(j, c_j), ...]

    Factors are evaluated up to the top term index plus K. Between term
    indices, runs of factors whose phase is below 2^-60 are skipped and
    their bounded contribution is added to tail_bound.
    """
    if K < 1:
        raise ValidationError(f"truncation must be >= 1, got {K}")
    xi0 = Fraction(xi0)
    c = xi0.denominator
    ordered = sorted((j, coef) for j, coef in terms if coef)
    top = ordered[-1][0] if ordered else 0
    last = top + K
    ratio = tail_ratio(system) * Fraction(4, 3)

    value = 1.0 + 0j
    skipped = 0.0
    total = xi0.numerator       # numerator of the running frequency over c
    pos = 0
    k = 1
    while k <= last:
        while pos < len(ordered) and ordered[pos][0] <= k:
            j, coef = ordered[pos]
            total += c * coef * system.rho(j)
            pos += 1

        if total == 0:
            # Integer frequency 0 from here on; every remaining factor is 1
            k = ordered[pos][0] if pos < len(ordered) else last + 1
            continue

        next_term = ordered[pos][0] if pos < len(ordered) else last + 1
        scale = c * system.B(k - 1)
        if next_term > k and abs(total) << NEGLIGIBLE_BITS < scale:
            skipped += math.pi * float(ratio * Fraction(abs(total), scale))
            k = next_term
            continue

        den = c * system.B(k)
        factor = _factor(system.q(k), total % den, den)
        if factor == 0:
            return FourierValue(0j, last, 0.0)
        value *= factor
        k += 1

    tail = skipped + _tail_sum(system, Fraction(abs(total), c), last)
    return FourierValue(value, last, min(2.0, tail))


def zero_set_member(system: MoranSystem, xi: int,
                    max_level: Optional[int] = None) -> Tuple[bool, Optional[int]]:
    """
    Exact membership of a nonzero integer in the zero set

    xi is a zero iff xi = B_k r_{k+1} m with q_{k+1} not dividing m for some
    k >= 0. Such k is the B-adic valuation of xi, so it is unique.

    Args:
        system: Moran system
        xi: Nonzero integer
        max_level: Restrict to the zeros of mu_n^ (requires k < n)

    Returns:
        (member, k) with k = None when not a member
    """
    if xi == 0:
        raise ValidationError("zero is never in the zero set")
    m = abs(xi)
    k = 0
    while m % system.b(k + 1) == 0:
        m //= system.b(k + 1)
        k += 1
    if m % system.r(k + 1) != 0:
        return False, None
    if max_level is not None and k >= max_level:
        return False, None
    return True, k


# ==================== NON-DECAY WITNESS ====================

@dataclass
class SupportBound:
    """Upper bound on max(B_k supp(mu) mod 1)"""
    k: int
    tail_terms: int
    partial: Fraction
    tail: Fraction

    @property
    def bound(self) -> Fraction:
        return self.partial + self.tail

    @property
    def below_one(self) -> bool:
        return self.bound < 1


def scaled_support_max(system: MoranSystem, k: int, tail_terms: int) -> SupportBound:
    """
    sum_{j<=T} (q_{k+j} - 1)/(b_{k+1}...b_{k+j}) plus a certified geometric tail

    Args:
        system: Moran system
        k: Scaling level (k >= 0)
        tail_terms: Number of exact terms T (T >= 1)

    Returns:
        SupportBound with exact rationals
    """
    if tail_terms < 1:
        raise ValidationError(f"tail_terms must be >= 1, got {tail_terms}")
    if k < 0:
        raise ValidationError(f"k must be >= 0, got {k}")

    partial = Fraction(0)
    scale = 1
    for j in range(1, tail_terms + 1):
        scale *= system.b(k + j)
        partial += Fraction(system.q(k + j) - 1, scale)
    tail = tail_ratio(system) * Fraction(4, 3) / scale

    result = SupportBound(k, tail_terms, partial, tail)
    if not result.below_one:
        logger.warning(f"Scaled support bound {result.bound} is not below 1 at k={k}")
    return result


@dataclass
class ProbePoint:
    k: int
    magnitude: float
    tail_bound: float


def fourier_nondecay_probe(system: MoranSystem, k_max: int, K_extra: int = 30,
                           include_origin: bool = False) -> List[ProbePoint]:
    """
    |mu^(B_k)| for k <= k_max (the first k factors are exactly 1)

    Args:
        system: Moran system
        k_max: Largest k (k_max >= 1)
        K_extra: Factors evaluated beyond the cancelled ones
        include_origin: Also report k = 0, i.e. |mu^(1)|

    Returns:
        List of ProbePoint
    """
    if k_max < 1:
        raise ValidationError(f"k_max must be >= 1, got {k_max}")
    start = 0 if include_origin else 1
    points = []
    for k in range(start, k_max + 1):
        result = fourier_transform(system, system.B(k), k + K_extra)
        points.append(ProbePoint(k, result.magnitude, result.tail_bound))
    logger.info(
        f"Non-decay probe to k={k_max}: min |mu^(B_k)| = {min(p.magnitude for p in points):.6f}"
    )
    return points
