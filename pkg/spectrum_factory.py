#!/usr/bin/env python3
"""
Spectrum Factory
Tree-mapping spectra of a Moran measure

Every index n >= 1 has a digit word sigma_1..sigma_k (k = k_n) and a shift
s_n >= 0. The tree mapping labels each prefix of sigma 0^infinity:
- a prefix ending in a nonzero digit is labeled with that digit
- a prefix sigma' 0^l (sigma' encoding n') is labeled q_{|sigma'|+l} when
  l = s_{n'} >= 1, and 0 otherwise; all-zero prefixes are labeled 0
and the frequency is

    lambda_n = sum_j label(sigma_1..sigma_j) rho_j + [s_n >= 1] B_{k+s_n}

Since B_{k+s} = q_{k+s} rho_{k+s}, every lambda_n is a sparse term list
[(j, c_j)] with lambda_n = sum c_j rho_j. That form feeds the exact
verifier and the sparse Fourier evaluator.

Families:
- canonical (all shifts 0), lacunary (s_n = n), intermediate (s_n = 0 on
  the thinned index set, n off it), sign-word, continuum samples
  (s_n = n^2 + bit off the thinned index set)
"""

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from digit_thinning import DEFAULT_THIN_DEPTH, ThinnedDigits, parse_target, thin_digits
from lab_errors import ValidationError
from logger_config import get_spectrum_logger
from mixed_radix import MixedRadixWord, decode_word, encode_index, index_depth
from moran_system import MoranSystem

logger = get_spectrum_logger()

Terms = List[Tuple[int, int]]

REGULAR = "regular"
IRREGULAR = "irregular"


# ==================== BIT SOURCES ====================

@dataclass
class BitSource:
    """
    Explicit bit string, optionally extended by random.Random(seed)

    Bits past the explicit string are generated once, in order, so the
    same (bits, seed) always yields the same infinite sequence.
    """
    bits: str = ""
    seed: Optional[int] = None
    _extended: List[int] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if any(ch not in "01" for ch in self.bits):
            raise ValidationError(f"bit string may only contain 0 and 1, got {self.bits!r}")

    def bit(self, i: int) -> int:
        if i < len(self.bits):
            return int(self.bits[i])
        if self.seed is None:
            raise ValidationError(
                f"bit string of length {len(self.bits)} is too short; bit {i} is needed",
                witness=i
            )
        if not self._extended:
            self._rng = random.Random(self.seed)
        while len(self._extended) <= i - len(self.bits):
            self._extended.append(self._rng.getrandbits(1))
        return self._extended[i - len(self.bits)]

    def available(self) -> Optional[int]:
        """Number of usable bits, None when unbounded"""
        return None if self.seed is not None else len(self.bits)


# ==================== SHIFT SEQUENCES ====================

class ShiftRule(Enum):
    ALL_ZERO = "all-zero"
    IDENTITY = "identity"
    SQUARE_CHOICE = "square-choice"
    ZERO_ON_GAMMA = "zero-on-gamma"
    CUSTOM = "custom"


@dataclass
class ShiftSequence:
    """
    Shift rule n -> s_n

    When `thinned` is set, indices of the thinned index set get s_n = 0 and
    the rule applies off it. Square-choice bits are consumed by the
    successive indices the rule applies to.
    """
    rule: ShiftRule
    bit_source: Optional[BitSource] = None
    table: Dict[int, int] = field(default_factory=dict)
    thinned: Optional[ThinnedDigits] = None
    _ordinals: Dict[int, int] = field(default_factory=dict, repr=False)
    _scan: List[int] = field(default_factory=lambda: [0, 0], repr=False)

    def __post_init__(self):
        if self.rule == ShiftRule.SQUARE_CHOICE and self.bit_source is None:
            raise ValidationError("square-choice shifts need a bit source")
        if self.rule == ShiftRule.ZERO_ON_GAMMA and self.thinned is None:
            raise ValidationError("zero-on-gamma shifts need a thinned digit sequence")
        if any(s < 0 for s in self.table.values()):
            raise ValidationError("custom shifts must be nonnegative")

    def on_gamma(self, n: int) -> bool:
        return self.thinned is not None and self.thinned.in_gamma(n)

    def ordinal(self, n: int) -> int:
        """Position of n among the indices >= 1 that are off the thinned index set"""
        if self.thinned is None:
            return n - 1
        next_n, count = self._scan
        while next_n <= n:
            if next_n >= 1 and not self.on_gamma(next_n):
                self._ordinals[next_n] = count
                count += 1
            next_n += 1
        self._scan[:] = [next_n, count]
        return self._ordinals[n]

    def shift(self, n: int) -> int:
        if n < 1:
            return 0
        if self.rule == ShiftRule.ALL_ZERO:
            return 0
        if self.rule == ShiftRule.CUSTOM:
            return self.table.get(n, 0)
        if self.on_gamma(n):
            return 0
        if self.rule in (ShiftRule.IDENTITY, ShiftRule.ZERO_ON_GAMMA):
            return n
        return n * n + self.bit_source.bit(self.ordinal(n))

    def max_index(self, limit: int) -> int:
        """Largest N <= limit whose shifts s_1..s_N are all computable"""
        if self.rule != ShiftRule.SQUARE_CHOICE or self.bit_source.available() is None:
            return limit
        usable = self.bit_source.available()
        for n in range(1, limit + 1):
            if not self.on_gamma(n) and self.ordinal(n) >= usable:
                return n - 1
        return limit

    def describe(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"rule": self.rule.value}
        if self.bit_source is not None:
            data["bits"] = self.bit_source.bits
            data["seed"] = self.bit_source.seed
        if self.thinned is not None:
            data["target"] = str(self.thinned.target)
        if self.table:
            data["table"] = {str(k): v for k, v in sorted(self.table.items())}
        return data


# ==================== SIGN WORDS ====================

class SignRule(Enum):
    ALL_PLUS = "all-plus"
    ALL_MINUS = "all-minus"
    PERIODIC = "periodic"
    PREFIX_PERIODIC = "prefix-periodic"
    BITS = "bits"


@dataclass
class SignWord:
    """w_1 w_2 ... in {-1, +1}; for the bit rule, bit 0 -> +1 and bit 1 -> -1"""
    rule: SignRule
    pattern: Tuple[int, ...] = ()
    prefix: Tuple[int, ...] = ()
    bit_source: Optional[BitSource] = None

    def __post_init__(self):
        if any(w not in (-1, 1) for w in self.pattern + self.prefix):
            raise ValidationError("sign words only contain -1 and +1")
        if self.rule in (SignRule.PERIODIC, SignRule.PREFIX_PERIODIC) and not self.pattern:
            raise ValidationError("periodic sign words need a nonempty pattern")
        if self.rule == SignRule.BITS and self.bit_source is None:
            raise ValidationError("bit sign words need a bit source")

    @classmethod
    def plus(cls) -> "SignWord":
        return cls(SignRule.ALL_PLUS)

    @classmethod
    def minus(cls) -> "SignWord":
        return cls(SignRule.ALL_MINUS)

    @classmethod
    def periodic(cls, *pattern: int) -> "SignWord":
        return cls(SignRule.PERIODIC, pattern=tuple(pattern))

    def sign(self, i: int) -> int:
        """w_i, 1-indexed"""
        if self.rule == SignRule.ALL_PLUS:
            return 1
        if self.rule == SignRule.ALL_MINUS:
            return -1
        if self.rule == SignRule.BITS:
            return -1 if self.bit_source.bit(i - 1) else 1
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        return self.pattern[(i - len(self.prefix) - 1) % len(self.pattern)]

    def describe(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"rule": self.rule.value}
        if self.pattern:
            data["pattern"] = list(self.pattern)
        if self.prefix:
            data["prefix"] = list(self.prefix)
        if self.bit_source is not None:
            data["bits"] = self.bit_source.bits
            data["seed"] = self.bit_source.seed
        return data


# ==================== TREE MAPPING ====================

class TreeMapping:
    """
    Labels of the index tree induced by a shift sequence

    `overrides` maps words (digit tuples) to labels and replaces the rule
    at those nodes; it models custom finite label tables.
    """

    def __init__(self, system: MoranSystem, shifts: ShiftSequence,
                 overrides: Optional[Dict[Tuple[int, ...], int]] = None):
        self.system = system
        self.shifts = shifts
        self.overrides = dict(overrides or {})

    def label(self, word: Sequence[int]) -> int:
        word = tuple(word)
        if word in self.overrides:
            return self.overrides[word]
        last = len(word)
        while last and word[last - 1] == 0:
            last -= 1
        if last == 0:
            return 0
        trailing = len(word) - last
        if trailing == 0:
            return word[-1]
        n = decode_word(self.system, MixedRadixWord(word[:last]))
        if trailing == self.shifts.shift(n):
            return self.system.q(len(word))
        return 0

    def ray_nonzero_count(self, n: int) -> int:
        """Number of l >= 1 with a nonzero label at sigma 0^l (sigma = word of n)"""
        word = encode_index(self.system, n).digits
        count = 1 if self.shifts.shift(n) >= 1 else 0
        for node, value in self.overrides.items():
            if len(node) > len(word) and node[:len(word)] == word and not any(node[len(word):]):
                rule_value = self.system.q(len(node)) if len(node) - len(word) == self.shifts.shift(n) else 0
                count += (value != 0) - (rule_value != 0)
        return count


def tree_map_value(system: MoranSystem, shifts: ShiftSequence, word: Sequence[int]) -> int:
    """Label of a node sigma 0^l (or of an all-zero word)"""
    return TreeMapping(system, shifts).label(word)


@dataclass
class TreeMappingReport:
    """Axiom scan of a tree mapping to finite depth"""
    depth: int
    nodes_checked: int
    valid: bool
    first_violation: Optional[Tuple[Tuple[int, ...], str]] = None
    max_label: int = 0
    dai_sun_bound: int = 0
    # Override entries that disagree with the shift rule at the same node (override wins)
    ambiguous_nodes: int = 0
    eventual_zero_by: int = 0


def _words(system: MoranSystem, length: int) -> Iterator[Tuple[int, ...]]:
    words: List[Tuple[int, ...]] = [()]
    for j in range(1, length + 1):
        words = [w + (d,) for w in words for d in range(system.q(j))]
    return iter(words)


def validate_tree_mapping(system: MoranSystem, shifts: ShiftSequence, depth: int,
                          overrides: Optional[Dict[Tuple[int, ...], int]] = None) -> TreeMappingReport:
    """
    Check the tree-mapping axioms on every word of length <= depth

    (i) all-zero words are labeled 0
    (ii) label(word) = last digit mod q_L and lies in {-1, ..., b_L - 2}
    (iii) every node has a zero-extension whose labels are eventually 0
    plus the uniform bound on nonzero labels along zero-rays.

    Axiom (iii) is judged inside the window: a zero-ray that already carried
    a nonzero label and is still nonzero at the deepest level fails.
    """
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    mapping = TreeMapping(system, shifts, overrides)
    rule = TreeMapping(system, shifts)
    report = TreeMappingReport(depth=depth, nodes_checked=0, valid=True)

    def fail(word: Tuple[int, ...], problem: str):
        report.valid = False
        if report.first_violation is None:
            report.first_violation = (word, problem)
            logger.warning(f"Tree mapping violation at {word}: {problem}")

    for length in range(1, depth + 1):
        q, b = system.q(length), system.b(length)
        for word in _words(system, length):
            report.nodes_checked += 1
            value = mapping.label(word)
            report.max_label = max(report.max_label, value)
            if word in mapping.overrides and rule.label(word) != value:
                report.ambiguous_nodes += 1
            if not any(word) and value != 0:
                fail(word, "zero word must be labeled 0")
            elif (value - word[-1]) % q != 0:
                fail(word, f"label {value} not congruent to digit {word[-1]} mod {q}")
            elif not -1 <= value <= b - 2:
                fail(word, f"label {value} outside -1..{b - 2}")

            if word[-1] == 0:
                continue
            n = decode_word(system, MixedRadixWord(word))
            report.eventual_zero_by = max(report.eventual_zero_by, length + shifts.shift(n))
            if length < depth:
                ray = [mapping.label(word + (0,) * l) for l in range(1, depth - length + 1)]
                if ray[-1] != 0 and any(ray[:-1]):
                    fail(word, f"zero-ray still gaining nonzero labels at depth {depth}")

    report.dai_sun_bound = dai_sun_bound(system, shifts, system.Q(depth) - 1, overrides)
    return report


def dai_sun_bound(system: MoranSystem, shifts: ShiftSequence, depth: int,
                  overrides: Optional[Dict[Tuple[int, ...], int]] = None) -> int:
    """max over 1 <= n <= depth of the nonzero label count on the zero-ray of n"""
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    mapping = TreeMapping(system, shifts, overrides)
    return max(mapping.ray_nonzero_count(n) for n in range(1, depth + 1))


def lambda_terms(system: MoranSystem, shifts: ShiftSequence, n: int) -> Terms:
    """Sparse form [(j, c_j)] of lambda_n = sum c_j rho_j"""
    if n == 0:
        return []
    digits = encode_index(system, n).digits
    terms: Terms = []
    last_nonzero = 0            # length of sigma' for the current zero run
    parent = 0                  # index encoded by sigma'
    for j, digit in enumerate(digits, start=1):
        if digit:
            terms.append((j, digit))
            parent += digit * system.Q(j - 1)
            last_nonzero = j
        elif last_nonzero and j - last_nonzero == shifts.shift(parent):
            terms.append((j, system.q(j)))
    shift = shifts.shift(n)
    if shift:
        top = len(digits) + shift
        terms.append((top, system.q(top)))
    return terms


def terms_value(system: MoranSystem, terms: Terms) -> int:
    return sum(coef * system.rho(j) for j, coef in terms)


def lambda_at(system: MoranSystem, shifts: ShiftSequence, n: int) -> int:
    """lambda_n as an exact integer (lambda_0 = 0)"""
    if n < 0:
        raise ValidationError(f"index must be >= 0, got {n}")
    return terms_value(system, lambda_terms(system, shifts, n))


# ==================== SPECTRA ====================

class SpectrumKind(Enum):
    CANONICAL = "canonical"
    LACUNARY = "lacunary"
    INTERMEDIATE = "intermediate"
    SIGN_WORD = "sign-word"
    CONTINUUM = "continuum-sample"
    CUSTOM = "custom"


@dataclass
class Spectrum:
    """
    Indexed frequency family n -> lambda_n

    Two truncation views:
    - points(N): indices 0..N (index order)
    - level_points(L): indices with k_n + s_n <= L (sorted values)
    `restriction` drops indices (punctured variants).
    """
    system: MoranSystem
    kind: SpectrumKind
    metadata: Dict[str, Any]
    shifts: ShiftSequence
    sign_word: Optional[SignWord] = None
    restriction: Optional[Callable[[int], bool]] = field(default=None, repr=False)

    @property
    def thinned(self) -> Optional[ThinnedDigits]:
        return self.shifts.thinned

    def includes(self, n: int) -> bool:
        return self.restriction is None or self.restriction(n)

    def terms(self, n: int) -> Terms:
        if self.sign_word is None:
            return lambda_terms(self.system, self.shifts, n)
        if n == 0:
            return []
        digits = encode_index(self.system, n).digits
        return [(j, d * self.sign_word.sign(j)) for j, d in enumerate(digits, start=1) if d]

    def lambda_at(self, n: int) -> int:
        return terms_value(self.system, self.terms(n))

    def part(self, n: int) -> Optional[str]:
        """regular / irregular tag for spectra built on a thinned index set"""
        if self.kind not in (SpectrumKind.INTERMEDIATE, SpectrumKind.CONTINUUM):
            return None
        if n == 0 or self.shifts.on_gamma(n):
            return REGULAR
        return IRREGULAR

    def indices(self, N: int) -> List[int]:
        return [n for n in range(N + 1) if self.includes(n)]

    def records(self, N: int) -> Iterator[Tuple[int, int, Optional[str]]]:
        """(n, lambda_n, part) for included n <= N"""
        for n in self.indices(N):
            yield n, self.lambda_at(n), self.part(n)

    def points(self, N: int) -> List[int]:
        """lambda_n for included n <= N, in index order"""
        return [self.lambda_at(n) for n in self.indices(N)]

    def points_within(self, N: int, bound: int) -> List[int]:
        """
        lambda_n <= bound for included n <= N, in index order

        An index with s_n >= 1 has lambda_n >= B_{k_n+s_n} >= 4^(k_n+s_n), so
        it is skipped without evaluating lambda_n once that power exceeds bound.
        """
        limit = bound.bit_length()
        out = []
        for n in self.indices(N):
            if n and self.sign_word is None:
                shift = self.shifts.shift(n)
                if shift and 2 * (index_depth(self.system, n) + shift) >= limit:
                    continue
            value = self.lambda_at(n)
            if value <= bound:
                out.append(value)
        return out

    def level_indices(self, level: int) -> List[int]:
        """Included indices with k_n + s_n <= level"""
        if level < 0:
            raise ValidationError(f"level must be >= 0, got {level}")
        out = []
        for n in range(self.system.Q(level)):
            if not self.includes(n):
                continue
            if n == 0:
                out.append(0)
                continue
            depth = index_depth(self.system, n)
            shift = 0 if self.sign_word is not None else self.shifts.shift(n)
            if depth + shift <= level:
                out.append(n)
        return out

    def level_points(self, level: int) -> List[int]:
        return sorted(self.lambda_at(n) for n in self.level_indices(level))

    def max_index(self, limit: int) -> int:
        """Largest N <= limit for which every lambda_n (n <= N) is computable"""
        return self.shifts.max_index(limit)

    def natural_scales(self, max_level: int) -> List[int]:
        """
        Interval lengths of the construction levels:
        sum_{i<=k} (d_i - 1) rho_i with d_i = q_i (canonical, sign-word) or
        q'_i (regular part of thinned spectra); empty for lacunary spectra
        """
        if self.kind == SpectrumKind.LACUNARY:
            return []
        if self.thinned is not None:
            counts = [self.thinned.qp(i) for i in range(1, max_level + 1)]
        elif self.kind in (SpectrumKind.CANONICAL, SpectrumKind.SIGN_WORD):
            counts = [self.system.q(i) for i in range(1, max_level + 1)]
        else:
            return []
        scales = []
        span = 0
        for i, count in enumerate(counts, start=1):
            span += (count - 1) * self.system.rho(i)
            if span >= 2 and (not scales or span > scales[-1]):
                scales.append(span)
        return scales

    def restricted(self, predicate: Callable[[int], bool], label: str) -> "Spectrum":
        """Copy keeping only the indices where predicate(n) holds"""
        base = self.restriction
        combined = predicate if base is None else (lambda n: base(n) and predicate(n))
        metadata = dict(self.metadata, restriction=label)
        return Spectrum(self.system, self.kind, metadata, self.shifts, self.sign_word, combined)

    def describe(self) -> Dict[str, Any]:
        data = {"kind": self.kind.value, "system": self.system.to_dict(), **self.metadata}
        data["shifts"] = self.shifts.describe()
        if self.sign_word is not None:
            data["sign_word"] = self.sign_word.describe()
        return data


def canonical_spectrum(system: MoranSystem) -> Spectrum:
    """All shifts zero: lambda_n = sum sigma_j rho_j"""
    return Spectrum(system, SpectrumKind.CANONICAL, {}, ShiftSequence(ShiftRule.ALL_ZERO))


def lacunary_spectrum(system: MoranSystem) -> Spectrum:
    """Identity shifts s_n = n"""
    return Spectrum(system, SpectrumKind.LACUNARY, {}, ShiftSequence(ShiftRule.IDENTITY))


def intermediate_spectrum(system: MoranSystem, t, depth: int = DEFAULT_THIN_DEPTH) -> Spectrum:
    """
    Zero shifts on the thinned index set, identity shifts off it

    The regular part is the integer Moran set with data ({b_k}, {q'_k}, {r_k}).
    """
    thinned = thin_digits(system, t, depth)
    shifts = ShiftSequence(ShiftRule.ZERO_ON_GAMMA, thinned=thinned)
    metadata = {"target": str(thinned.target), "checkpoints": list(thinned.checkpoints[:16])}
    return Spectrum(system, SpectrumKind.INTERMEDIATE, metadata, shifts)


def sign_word_spectrum(system: MoranSystem, word: SignWord) -> Spectrum:
    """lambda_n = sum sigma_j w_j rho_j"""
    return Spectrum(system, SpectrumKind.SIGN_WORD, {}, ShiftSequence(ShiftRule.ALL_ZERO), word)


def continuum_family_sample(system: MoranSystem, t, bits: str, seed: Optional[int] = None,
                            depth: int = DEFAULT_THIN_DEPTH) -> Spectrum:
    """
    One member of the two-choice family: s_n in {n^2, n^2 + 1} off the
    thinned index set (chosen by successive bits), 0 on it.
    t = 0 uses the empty index set.
    """
    target = parse_target(t)
    if target < 0:
        raise ValidationError(f"target {target} must be >= 0")
    thinned = thin_digits(system, target, depth) if target > 0 else None
    shifts = ShiftSequence(ShiftRule.SQUARE_CHOICE, bit_source=BitSource(bits, seed), thinned=thinned)
    metadata = {"target": str(target)}
    return Spectrum(system, SpectrumKind.CONTINUUM, metadata, shifts)


def spectrum_for_dimension(system: MoranSystem, t: Union[str, float], depth: int = DEFAULT_THIN_DEPTH) -> Spectrum:
    """
    A spectrum of counting dimension t for any t in [0, ue]

    t = 0 gives the lacunary spectrum, t = "ue" the canonical spectrum,
    anything in between the intermediate construction.
    """
    if isinstance(t, str) and t.strip().lower() == "ue":
        spectrum = canonical_spectrum(system)
        route = "ue"
    elif parse_target(t) == 0:
        spectrum = lacunary_spectrum(system)
        route = "zero"
    else:
        spectrum = intermediate_spectrum(system, t, depth)
        route = "intermediate"
    spectrum.metadata["route"] = route
    logger.info(f"Spectrum for dimension {t}: {spectrum.kind.value}")
    return spectrum


def first_difference(a: Spectrum, b: Spectrum, index_cap: int) -> Optional[int]:
    """Smallest n <= index_cap with different lambda_n, or None"""
    for n in range(index_cap + 1):
        if a.lambda_at(n) != b.lambda_at(n):
            return n
    return None
