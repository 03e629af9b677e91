"""
Digit Thinning
Greedy thinning of the digit counts toward a target dimension t

Positions are either filled (q'_i = q_i) or thinned (q'_i = 1):
- q'_1 = 1, then fill while log(q'_1...q'_i) / log(B_i) <= t
- the first position where filling would overshoot closes a checkpoint
  k_j = i - 1; that position is restored (q'_i = q_i) and thinning starts
- thin while the ratio with the next digit restored would exceed t; the
  first position where it would not is restored and filling resumes

All comparisons are exact (integer powers against the decimal target).
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Tuple, Union

from integer_moran import IntegerMoranData
from lab_errors import ValidationError
from logger_config import get_spectrum_logger
from mixed_radix import encode_index
from moran_system import MoranSystem, compare_log_ratio, upper_entropy_dim

logger = get_spectrum_logger()

DEFAULT_THIN_DEPTH = 200

Target = Union[str, int, float, Fraction]


def parse_target(t: Target) -> Fraction:
    """Exact decimal target: "0.25" -> 1/4; floats go through their shortest repr"""
    if isinstance(t, Fraction):
        return t
    if isinstance(t, float):
        t = repr(t)
    try:
        return Fraction(t)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"target dimension {t!r} is not a decimal number")


@dataclass
class ThinnedDigits:
    """Thinned digit counts q'_1..q'_depth with their checkpoints"""
    system: MoranSystem = field(repr=False)
    target: Fraction
    qprime: Tuple[int, ...]
    checkpoints: Tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.qprime)

    def qp(self, i: int) -> int:
        if i > self.depth:
            raise ValidationError(f"thinning only covers {self.depth} positions, asked for {i}")
        return self.qprime[i - 1]

    def prefix_product(self, k: int) -> int:
        product = 1
        for digit in self.qprime[:k]:
            product *= digit
        return product

    def prefix_ratios(self) -> List[Tuple[int, float]]:
        ratios = []
        product = 1
        for k, digit in enumerate(self.qprime, start=1):
            product *= digit
            ratios.append((k, math.log(product) / math.log(self.system.B(k))))
        return ratios

    def checkpoint_inequalities(self) -> List[Tuple[int, bool, bool]]:
        """
        Exact two-sided check at each checkpoint k_j:
        ratio(k_j) <= t and ratio(k_j + 1) > t
        """
        rows = []
        for k in self.checkpoints:
            if k + 1 > self.depth:
                continue
            left = compare_log_ratio(self.prefix_product(k), self.system.B(k), self.target) <= 0
            right = compare_log_ratio(self.prefix_product(k + 1), self.system.B(k + 1), self.target) > 0
            rows.append((k, left, right))
        return rows

    def integer_moran_data(self) -> IntegerMoranData:
        """Data ({b_k}, {q'_k}, {r_k}) of the regular part"""
        return IntegerMoranData.from_system(self.system, self.qprime)

    def in_gamma(self, n: int) -> bool:
        """n >= 1 belongs to the index set when every digit sigma_j < q'_j"""
        word = encode_index(self.system, n)
        if word.depth > self.depth:
            raise ValidationError(f"index {n} needs {word.depth} thinned positions, have {self.depth}")
        return all(digit < self.qprime[j] for j, digit in enumerate(word.digits))


def thin_digits(system: MoranSystem, t: Target, depth: int = DEFAULT_THIN_DEPTH) -> ThinnedDigits:
    """
    Thin the digit counts of a system toward target dimension t

    Args:
        system: Moran system
        t: Target in (0, ue), as an exact decimal
        depth: Number of positions to produce

    Returns:
        ThinnedDigits

    Raises:
        ValidationError: t outside the open interval (0, ue)
    """
    t = parse_target(t)
    if depth < 2:
        raise ValidationError(f"thinning depth must be >= 2, got {depth}")
    if t <= 0:
        raise ValidationError(f"target {t} must be positive")

    exact = system.exact_dimension()
    if exact is not None:
        if exact.compare(t) <= 0:
            raise ValidationError(f"target {t} is not below the upper entropy dimension {exact}")
    else:
        ue = upper_entropy_dim(system, depth).value
        if float(t) >= ue:
            raise ValidationError(f"target {t} is not below the sampled upper entropy dimension {ue:.6f}")

    qprime = [1]
    checkpoints = []
    product = 1
    filling = True
    for i in range(2, depth + 1):
        q = system.q(i)
        fits = compare_log_ratio(product * q, system.B(i), t) <= 0
        if filling and not fits:
            checkpoints.append(i - 1)
            filling = False
            qprime.append(q)
            product *= q
        elif filling or fits:
            filling = True
            qprime.append(q)
            product *= q
        else:
            qprime.append(1)

    logger.info(
        f"Thinned {system.name or 'system'} toward t={t} to depth {depth}: "
        f"{len(checkpoints)} checkpoints, first {checkpoints[:4]}"
    )
    return ThinnedDigits(system, t, tuple(qprime), tuple(checkpoints))


@dataclass
class GammaSplit:
    """Indices 1..N split by membership in the thinned index set"""
    gamma: List[int]
    complement: List[int]


def gamma_index_set(system: MoranSystem, thinned: ThinnedDigits, N: int) -> GammaSplit:
    """
    Split 1..N into the thinned index set and its complement

    Args:
        system: Moran system the thinning was built for
        thinned: Output of thin_digits
        N: Largest index

    Returns:
        GammaSplit with both sorted lists
    """
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if thinned.system != system:
        raise ValidationError("thinning was built for a different system")
    split = GammaSplit([], [])
    for n in range(1, N + 1):
        (split.gamma if thinned.in_gamma(n) else split.complement).append(n)
    return split
