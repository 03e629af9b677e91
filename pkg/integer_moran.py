"""
Integer Moran Sets
M_k = { sum_{i<=k} x_i t_i n_1...n_{i-1} : 0 <= x_i < m_i }

Data is kept as finite prefixes; when it continues periodically the
period is recorded so closed-form values can be reported exactly.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from lab_errors import ValidationError
from logger_config import get_spectrum_logger
from moran_system import MoranSystem, SequenceSpec

logger = get_spectrum_logger()


@dataclass(frozen=True)
class IntegerMoranData:
    """Sequences {n_k}, {m_k}, {t_k} (1-indexed, n_0 = 1) over a finite prefix"""
    n_seq: Tuple[int, ...]
    m_seq: Tuple[int, ...]
    t_seq: Tuple[int, ...]
    # (prefix length, period length) when the data continues periodically past the prefix
    period: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if not (len(self.n_seq) == len(self.m_seq) == len(self.t_seq)):
            raise ValidationError("n, m and t prefixes must have equal length")
        for label, seq in (("n", self.n_seq), ("m", self.m_seq), ("t", self.t_seq)):
            bad = [v for v in seq if not isinstance(v, int) or v < 1]
            if bad:
                raise ValidationError(f"{label} entries must be positive integers, got {bad[0]!r}")

    @property
    def depth(self) -> int:
        return len(self.n_seq)

    def N(self, k: int) -> int:
        """n_1 ... n_k"""
        return math.prod(self.n_seq[:k])

    def step(self, i: int) -> int:
        """t_i n_1 ... n_{i-1}"""
        return self.t_seq[i - 1] * self.N(i - 1)

    @classmethod
    def from_specs(cls, n_spec: SequenceSpec, m_spec: SequenceSpec, t_spec: SequenceSpec,
                   depth: int) -> "IntegerMoranData":
        structures = [s.periodic_structure() for s in (n_spec, m_spec, t_spec)]
        period = None
        if all(structures):
            period = (max(s[0] for s in structures), math.lcm(*(s[1] for s in structures)))
        return cls(tuple(n_spec.terms(depth)), tuple(m_spec.terms(depth)),
                   tuple(t_spec.terms(depth)), period)

    @classmethod
    def from_system(cls, system: MoranSystem, digit_counts: Sequence[int],
                    period: Optional[Tuple[int, int]] = None) -> "IntegerMoranData":
        """Data ({b_k}, digit_counts, {r_k}); its set is {sum x_i rho_i : x_i < digit_counts_i}"""
        depth = len(digit_counts)
        return cls(
            tuple(system.b(k) for k in range(1, depth + 1)),
            tuple(digit_counts),
            tuple(system.r(k) for k in range(1, depth + 1)),
            period,
        )


@dataclass
class CfdReport:
    """Outcome of the separation condition scan"""
    valid: bool
    depth: int
    failure_k: Optional[int] = None
    lhs: Optional[int] = None
    rhs: Optional[int] = None

    def __bool__(self):
        return self.valid


def validate_cfd(data: IntegerMoranData, depth: int) -> CfdReport:
    """
    Check t_{k+1} n_1...n_k > sum_{i<=k} (m_i - 1) t_i n_1...n_{i-1} for k < depth

    Args:
        data: Integer Moran data
        depth: Number of levels the set will be built to

    Returns:
        CfdReport with the first failing k (if any)
    """
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    if depth > data.depth:
        raise ValidationError(f"data only covers {data.depth} levels, asked for {depth}")

    spread = 0
    for k in range(1, depth):
        spread += (data.m_seq[k - 1] - 1) * data.step(k)
        lhs = data.step(k + 1)
        if lhs <= spread:
            logger.debug(f"Separation condition fails at k={k}: {lhs} <= {spread}")
            return CfdReport(False, depth, k, lhs, spread)
    return CfdReport(True, depth)


def integer_moran_set(data: IntegerMoranData, depth: int) -> List[int]:
    """
    Materialize M_depth as a sorted list

    Raises:
        ValidationError: if the separation condition fails (witness = failing k)
    """
    report = validate_cfd(data, depth)
    if not report:
        raise ValidationError(
            f"separation condition fails at k={report.failure_k}: "
            f"{report.lhs} <= {report.rhs}",
            witness=report.failure_k
        )

    points = [0]
    for i in range(1, depth + 1):
        step = data.step(i)
        points = [p + x * step for x in range(data.m_seq[i - 1]) for p in points]
    points.sort()
    return points


def natural_scales(data: IntegerMoranData, depth: int) -> List[int]:
    """J_k = sum_{i<=k} (m_i - 1) t_i n_1...n_{i-1}, k <= depth, distinct and >= 2"""
    scales = []
    span = 0
    for k in range(1, depth + 1):
        span += (data.m_seq[k - 1] - 1) * data.step(k)
        if span >= 2 and (not scales or span > scales[-1]):
            scales.append(span)
    return scales
