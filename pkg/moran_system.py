#!/usr/bin/env python3
"""
Moran System
Sequence rules, validated Moran systems and their closed-form dimensions

A Moran system is a pair of integer sequences {b_n} (bases) and {q_n}
(digit counts) with consecutive digit sets D_n = {0, ..., q_n - 1}.
This module provides:
- SequenceSpec: finite, deterministic rules generating infinite sequences
- MoranSystem: validated pair with cached scale ladder B_k, Q_k, rho_k
- Prefix-ratio reports for the upper entropy dimension (limsup) and the
  Hausdorff dimension of the support (liminf), exact for eventually
  periodic systems
"""

import math
import threading
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

from lab_errors import ConfigError, ValidationError
from logger_config import get_system_logger

logger = get_system_logger()

DEFAULT_VALIDATION_DEPTH = 64
DEFAULT_TOLERANCE = 1e-9
DOUBLING = "doubling"

# Eventually periodic rules are validated over a full period when it is this short
MAX_PERIOD_CHECK = 100_000

BlockLength = Union[int, str]


class SequenceKind(Enum):
    """Supported sequence rules"""
    PERIODIC = "periodic"
    PREFIX_PERIODIC = "explicit-prefix-then-periodic"
    BLOCK_PROGRAM = "block-program"


# ==================== SEQUENCE RULES ====================

@dataclass(frozen=True)
class SequenceSpec:
    """
    Deterministic rule for a positive integer sequence (1-indexed)

    - periodic: values repeat forever
    - explicit-prefix-then-periodic: prefix once, then values repeat
    - block-program: (value, length) entries emitted in order, forever;
      a length of "doubling" emits 2^c copies on pass c = 0, 1, 2, ...
    """
    kind: SequenceKind
    values: Tuple[int, ...] = ()
    prefix: Tuple[int, ...] = ()
    blocks: Tuple[Tuple[int, BlockLength], ...] = ()

    def __post_init__(self):
        if self.kind in (SequenceKind.PERIODIC, SequenceKind.PREFIX_PERIODIC):
            if not self.values:
                raise ConfigError("periodic part must not be empty", "values")
            _require_positive(self.values, "values")
            _require_positive(self.prefix, "prefix")
            if self.kind == SequenceKind.PERIODIC and self.prefix:
                raise ConfigError("a periodic rule takes no prefix", "prefix")
        else:
            if not self.blocks:
                raise ConfigError("block program must have at least one block", "blocks")
            for i, (value, length) in enumerate(self.blocks):
                _require_positive((value,), f"blocks[{i}].value")
                if length != DOUBLING and (not isinstance(length, int) or length < 1):
                    raise ConfigError(
                        f"length must be a positive integer or '{DOUBLING}', got {length!r}",
                        f"blocks[{i}].length"
                    )

    @classmethod
    def periodic(cls, *values: int) -> "SequenceSpec":
        return cls(SequenceKind.PERIODIC, values=tuple(values))

    @classmethod
    def prefix_periodic(cls, prefix, values) -> "SequenceSpec":
        return cls(SequenceKind.PREFIX_PERIODIC, values=tuple(values), prefix=tuple(prefix))

    @classmethod
    def block_program(cls, blocks) -> "SequenceSpec":
        return cls(SequenceKind.BLOCK_PROGRAM, blocks=tuple((v, l) for v, l in blocks))

    @classmethod
    def from_dict(cls, data: Dict[str, Any], field_path: str = "") -> "SequenceSpec":
        """
        Build a rule from its config form

        Args:
            data: {"kind": ..., "values": [...], "prefix": [...], "blocks": [[v, len], ...]}
            field_path: Location used in error messages

        Returns:
            SequenceSpec
        """
        if not isinstance(data, dict):
            raise ConfigError("expected an object", field_path)
        try:
            kind = SequenceKind(data.get("kind", "periodic"))
        except ValueError:
            raise ConfigError(
                f"unknown kind {data.get('kind')!r}; expected one of "
                f"{[k.value for k in SequenceKind]}",
                f"{field_path}.kind"
            )
        try:
            if kind == SequenceKind.BLOCK_PROGRAM:
                blocks = [tuple(entry) for entry in data.get("blocks", [])]
                if any(len(entry) != 2 for entry in blocks):
                    raise ConfigError("each block is [value, length]", "blocks")
                return cls.block_program(blocks)
            return cls(
                kind,
                values=tuple(data.get("values", [])),
                prefix=tuple(data.get("prefix", [])),
            )
        except ConfigError as e:
            raise ConfigError(str(e).split(": ", 1)[-1], f"{field_path}.{e.field_path}")

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind == SequenceKind.BLOCK_PROGRAM:
            data["blocks"] = [[v, l] for v, l in self.blocks]
        else:
            data["values"] = list(self.values)
            if self.prefix:
                data["prefix"] = list(self.prefix)
        return data

    @property
    def has_doubling(self) -> bool:
        return any(length == DOUBLING for _, length in self.blocks)

    def periodic_structure(self) -> Optional[Tuple[int, int]]:
        """(prefix length, period length) for eventually periodic rules, else None"""
        if self.kind == SequenceKind.PERIODIC:
            return 0, len(self.values)
        if self.kind == SequenceKind.PREFIX_PERIODIC:
            return len(self.prefix), len(self.values)
        if self.has_doubling:
            return None
        return 0, sum(length for _, length in self.blocks)

    def iter_terms(self) -> Iterator[int]:
        """Yield b_1, b_2, ... forever"""
        if self.kind != SequenceKind.BLOCK_PROGRAM:
            yield from self.prefix
            while True:
                yield from self.values
        pass_index = 0
        while True:
            for value, length in self.blocks:
                count = 2 ** pass_index if length == DOUBLING else length
                for _ in range(count):
                    yield value
            pass_index += 1

    def terms(self, count: int) -> List[int]:
        """First `count` terms"""
        out = []
        if count <= 0:
            return out
        for value in self.iter_terms():
            out.append(value)
            if len(out) == count:
                break
        return out

    def term(self, n: int) -> int:
        """Term n (1-indexed)"""
        if n < 1:
            raise ValidationError(f"sequence index must be >= 1, got {n}")
        if self.kind != SequenceKind.BLOCK_PROGRAM:
            if n <= len(self.prefix):
                return self.prefix[n - 1]
            return self.values[(n - len(self.prefix) - 1) % len(self.values)]
        return self.terms(n)[-1]

    def max_value(self) -> int:
        pool = self.values + self.prefix + tuple(v for v, _ in self.blocks)
        return max(pool)


def _require_positive(values, field_path: str):
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"terms must be positive integers, got {v!r}", f"{field_path}[{i}]")


# ==================== EXACT LOG RATIOS ====================

@dataclass(frozen=True)
class ExactLogRatio:
    """log(numerator) / log(denominator) kept as integers"""
    numerator: int
    denominator: int

    @property
    def value(self) -> float:
        return math.log(self.numerator) / math.log(self.denominator)

    def compare(self, t: Fraction) -> int:
        """Sign of value - t, decided exactly"""
        return compare_log_ratio(self.numerator, self.denominator, t)

    def __str__(self):
        return f"log({self.numerator})/log({self.denominator})"


def compare_log_ratio(a: int, b: int, t: Fraction) -> int:
    """
    Exact sign of log(a)/log(b) - t for integers a >= 1, b >= 2 and rational t >= 0

    With t = p/s this is the sign of a^s - b^p. Floating point settles the
    clear cases; near-ties fall through to the integer power comparison.
    """
    t = Fraction(t)
    approx = math.log(a) / math.log(b) - float(t)
    if abs(approx) > 1e-9:
        return 1 if approx > 0 else -1
    lhs = a ** t.denominator
    rhs = b ** t.numerator
    return (lhs > rhs) - (lhs < rhs)


# ==================== MORAN SYSTEM ====================

@dataclass(frozen=True)
class MoranSystem:
    """
    Validated Moran system

    Invariants (checked by build_system on a prefix):
        2 <= q_n < b_n, r_n = b_n / q_n integer >= 2, b_n <= bound
    """
    b_spec: SequenceSpec
    q_spec: SequenceSpec
    bound: int
    name: str = ""
    validated_depth: int = DEFAULT_VALIDATION_DEPTH
    _b: List[int] = field(default_factory=list, repr=False, compare=False)
    _q: List[int] = field(default_factory=list, repr=False, compare=False)
    _B: List[int] = field(default_factory=lambda: [1], repr=False, compare=False)
    _Q: List[int] = field(default_factory=lambda: [1], repr=False, compare=False)
    _lock: Any = field(default_factory=threading.Lock, repr=False, compare=False)

    def __str__(self):
        label = self.name or "system"
        return f"{label}(b={self.b_spec.to_dict()}, q={self.q_spec.to_dict()}, M={self.bound})"

    def __hash__(self):
        return hash((self.b_spec, self.q_spec, self.bound))

    def _extend(self, k: int):
        if len(self._b) >= k:
            return
        with self._lock:
            if len(self._b) >= k:
                return
            # Grow geometrically so repeated small requests stay cheap
            target = max(k, 2 * len(self._b), 64)
            b_terms = self.b_spec.terms(target)
            q_terms = self.q_spec.terms(target)
            for n in range(len(self._b), target):
                self._B.append(self._B[-1] * b_terms[n])
                self._Q.append(self._Q[-1] * q_terms[n])
            self._q[:] = q_terms
            self._b[:] = b_terms

    def b(self, n: int) -> int:
        self._extend(n)
        return self._b[n - 1]

    def q(self, n: int) -> int:
        self._extend(n)
        return self._q[n - 1]

    def r(self, n: int) -> int:
        return self.b(n) // self.q(n)

    def B(self, k: int) -> int:
        """b_1 ... b_k (B_0 = 1)"""
        self._extend(k)
        return self._B[k]

    def Q(self, k: int) -> int:
        """q_1 ... q_k (Q_0 = 1)"""
        self._extend(k)
        return self._Q[k]

    def rho(self, k: int) -> int:
        """r_k * b_1 ... b_{k-1}"""
        return self.r(k) * self.B(k - 1)

    def prefix_ratio(self, k: int) -> float:
        return math.log(self.Q(k)) / math.log(self.B(k))

    def periodic_structure(self) -> Optional[Tuple[int, int]]:
        """Joint (prefix length, period) of b and q, or None"""
        b_struct = self.b_spec.periodic_structure()
        q_struct = self.q_spec.periodic_structure()
        if b_struct is None or q_struct is None:
            return None
        return max(b_struct[0], q_struct[0]), math.lcm(b_struct[1], q_struct[1])

    def exact_dimension(self) -> Optional[ExactLogRatio]:
        """Limit of log Q_k / log B_k for eventually periodic systems"""
        structure = self.periodic_structure()
        if structure is None:
            return None
        start, period = structure
        qs = math.prod(self.q(n) for n in range(start + 1, start + period + 1))
        bs = math.prod(self.b(n) for n in range(start + 1, start + period + 1))
        return ExactLogRatio(qs, bs)

    def to_dict(self) -> Dict[str, Any]:
        data = {"b": self.b_spec.to_dict(), "q": self.q_spec.to_dict(), "bound": self.bound}
        if self.name:
            data["name"] = self.name
        return data


def build_system(
    b_spec: SequenceSpec,
    q_spec: SequenceSpec,
    depth: int = DEFAULT_VALIDATION_DEPTH,
    bound: Optional[int] = None,
    name: str = ""
) -> MoranSystem:
    """
    Validate a Moran system on a prefix

    Args:
        b_spec: Rule for the bases b_n
        q_spec: Rule for the digit counts q_n
        depth: Prefix length to validate (extended to one full period for
            eventually periodic rules)
        bound: Declared M; defaults to the largest base the rule can emit
        name: Optional label

    Returns:
        MoranSystem

    Raises:
        ValidationError: with the first failing index as witness
    """
    if depth < 1:
        raise ValidationError(f"validation depth must be >= 1, got {depth}")

    declared = bound
    if bound is None:
        bound = b_spec.max_value()

    system = MoranSystem(b_spec, q_spec, bound, name=name, validated_depth=depth)

    check_depth = depth
    structure = system.periodic_structure()
    if structure is not None and sum(structure) <= MAX_PERIOD_CHECK:
        check_depth = max(depth, sum(structure))

    for n in range(1, check_depth + 1):
        b, q = system.b(n), system.q(n)
        if q < 2:
            raise ValidationError(f"q_{n} = {q} must be at least 2", witness=n)
        if b % q != 0:
            raise ValidationError(f"q_{n} = {q} does not divide b_{n} = {b}", witness=n)
        if b // q < 2:
            raise ValidationError(f"r_{n} = b_{n}/q_{n} = {b // q} must be at least 2", witness=n)
        if b > bound:
            label = "declared bound" if declared is not None else "bound"
            raise ValidationError(f"b_{n} = {b} exceeds the {label} M = {bound}", witness=n)

    logger.info(f"Built {system} (validated to depth {check_depth})")
    return system


def system_from_dict(data: Dict[str, Any], depth: int = DEFAULT_VALIDATION_DEPTH,
                     field_path: str = "system") -> MoranSystem:
    """Build a system from its config form {name?, b, q, bound?} or {preset}"""
    if not isinstance(data, dict):
        raise ConfigError("expected an object", field_path)
    if "preset" in data:
        return preset_system(data["preset"], depth=depth)
    for key in ("b", "q"):
        if key not in data:
            raise ConfigError("missing required field", f"{field_path}.{key}")
    bound = data.get("bound")
    if bound is not None and (not isinstance(bound, int) or bound < 2):
        raise ConfigError("bound must be an integer >= 2", f"{field_path}.bound")
    return build_system(
        SequenceSpec.from_dict(data["b"], f"{field_path}.b"),
        SequenceSpec.from_dict(data["q"], f"{field_path}.q"),
        depth=depth,
        bound=bound,
        name=data.get("name", ""),
    )


def preset_system(name: str, depth: int = DEFAULT_VALIDATION_DEPTH) -> MoranSystem:
    """
    Named systems

    - cantor: b = 4, q = 2
    - mixed: b = (4, 6), q = (2, 3) periodic
    - bernoulli-<k>: b = 2k, q = 2 (spectral Bernoulli convolution, k >= 2)
    """
    if name == "cantor":
        return build_system(SequenceSpec.periodic(4), SequenceSpec.periodic(2), depth, name=name)
    if name == "mixed":
        return build_system(SequenceSpec.periodic(4, 6), SequenceSpec.periodic(2, 3), depth, name=name)
    if name.startswith("bernoulli-"):
        try:
            k = int(name.split("-", 1)[1])
        except ValueError:
            raise ConfigError(f"bad preset {name!r}", "system.preset")
        return build_system(SequenceSpec.periodic(2 * k), SequenceSpec.periodic(2), depth, name=name)
    raise ConfigError(f"unknown preset {name!r}", "system.preset")


def scale_ladder(system: MoranSystem, k: int) -> Tuple[int, int, int]:
    """
    Scale ladder at depth k

    Returns:
        (B_k, Q_k, rho_k) as arbitrary-precision integers
    """
    if k < 1:
        raise ValidationError(f"depth must be >= 1, got {k}")
    return system.B(k), system.Q(k), system.rho(k)


# ==================== DIMENSION REPORTS ====================

@dataclass
class DimensionReport:
    """Prefix-ratio dimension report"""
    value: float
    sampled_value: float
    prefix_samples: List[Tuple[int, float]]
    mode: str                       # "limsup" or "liminf"
    converged: bool
    tolerance: float
    exact: Optional[ExactLogRatio] = None

    def __str__(self):
        source = f"exact {self.exact}" if self.exact else "sampled"
        return (f"DimensionReport({self.mode}={self.value:.6f}, {source}, "
                f"converged={self.converged})")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "value": self.value,
            "sampled_value": self.sampled_value,
            "converged": self.converged,
            "tolerance": self.tolerance,
            "exact": str(self.exact) if self.exact else None,
            "depth": self.prefix_samples[-1][0] if self.prefix_samples else 0,
        }


def _prefix_report(system: MoranSystem, depth: int, mode: str, tolerance: float) -> DimensionReport:
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")

    samples = [(k, system.prefix_ratio(k)) for k in range(1, depth + 1)]
    pick = max if mode == "limsup" else min

    # Tail = second half of the samples; the last quarter tests stability
    tail = [ratio for k, ratio in samples if k > depth // 2] or [samples[-1][1]]
    late = [ratio for k, ratio in samples if k > (3 * depth) // 4] or [samples[-1][1]]
    sampled = pick(tail)
    converged = abs(pick(late) - sampled) <= tolerance

    exact = system.exact_dimension()
    value = exact.value if exact is not None else sampled
    logger.debug(f"{mode} report for {system.name or 'system'}: sampled={sampled:.9f}, value={value:.9f}")
    return DimensionReport(value, sampled, samples, mode, converged, tolerance, exact)


def upper_entropy_dim(system: MoranSystem, depth: int = DEFAULT_VALIDATION_DEPTH,
                      tolerance: float = DEFAULT_TOLERANCE) -> DimensionReport:
    """limsup of log Q_k / log B_k (upper entropy dimension of the measure)"""
    return _prefix_report(system, depth, "limsup", tolerance)


def hausdorff_support_dim(system: MoranSystem, depth: int = DEFAULT_VALIDATION_DEPTH,
                          tolerance: float = DEFAULT_TOLERANCE) -> DimensionReport:
    """liminf of log Q_k / log B_k (Hausdorff dimension of the support)"""
    return _prefix_report(system, depth, "liminf", tolerance)
