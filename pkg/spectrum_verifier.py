#!/usr/bin/env python3
"""
Spectrum Verifier
Exact and numeric checks that constructed sets behave as spectra

Features:
- pairwise_orthogonal: every difference lies in the zero set (integer test)
- compatible_pair_check: per-level digit matrix unitarity
- level_unitarity: atomic-level exponential matrix against mu_n
- completeness_profile: partial sums of |mu^(xi + lambda)|^2
- separation_check: distance between normalized sign-word sums and the zeros
- tensor_consistency / level_parseval: level-wise consistency checks
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lab_errors import ValidationError
from logger_config import get_verifier_logger
from measure_engine import (
    DEFAULT_MAX_LEVEL, INT64_SAFE, AtomicMeasure,
    fourier_transform, fourier_transform_terms, level_measure, zero_set_member
)
from moran_system import MoranSystem
from spectrum_factory import SignWord, Spectrum, canonical_spectrum, sign_word_spectrum

logger = get_verifier_logger()

UNITARITY_TOLERANCE = 1e-9
MAX_MATRIX_DIM = 1024
MAX_REPORTED_FAILURES = 100
ROW_BLOCK = 256


# ==================== ORTHOGONALITY ====================

@dataclass
class OrthogonalityReport:
    pairs_checked: int
    failures: List[Tuple[int, int, int]] = field(default_factory=list)
    failure_count: int = 0
    exact: bool = True
    max_level: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.failure_count == 0

    def __str__(self):
        status = "pass" if self.passed else f"{self.failure_count} failures"
        return f"OrthogonalityReport({self.pairs_checked} pairs, {status})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pairs_checked": self.pairs_checked,
            "failure_count": self.failure_count,
            "failures": [[str(a), str(b), str(d)] for a, b, d in self.failures],
            "exact": self.exact,
            "max_level": self.max_level,
        }


def _residue_level(system: MoranSystem) -> int:
    """Largest K with B_K < 2^62"""
    K = 0
    while system.B(K + 1) < INT64_SAFE:
        K += 1
    return K


def _check_rows(system: MoranSystem, points: Sequence[int], residues: np.ndarray,
                K: int, rows: range, max_level: Optional[int]) -> Tuple[int, int, List[Tuple[int, int, int]]]:
    b_arr = np.array([system.b(j) for j in range(1, K + 1)], dtype=np.int64)
    r_arr = np.array([system.r(j) for j in range(1, K + 1)], dtype=np.int64)
    modulus = system.B(K)

    pairs = 0
    count = 0
    failures = []
    for i in rows:
        others = residues[i + 1:]
        if not len(others):
            continue
        pairs += len(others)
        diff = (others - residues[i]) % modulus
        reduced = diff.copy()
        valuation = np.zeros(len(diff), dtype=np.int64)
        active = diff != 0
        for j in range(K):
            active &= reduced % b_arr[j] == 0
            if not active.any():
                break
            reduced[active] //= b_arr[j]
            valuation[active] += 1

        nonzero = diff != 0
        member = np.zeros(len(diff), dtype=bool)
        safe_v = np.minimum(valuation, K - 1)
        member[nonzero] = reduced[nonzero] % r_arr[safe_v[nonzero]] == 0
        if max_level is not None:
            member &= valuation < max_level

        # residue 0 mod B_K: valuation >= K, decide on the exact difference
        for offset in np.flatnonzero(~nonzero):
            j = i + 1 + int(offset)
            ok, _ = zero_set_member(system, points[j] - points[i], max_level)
            member[offset] = ok

        bad = np.flatnonzero(~member)
        count += len(bad)
        for offset in bad[:max(0, MAX_REPORTED_FAILURES - len(failures))]:
            j = i + 1 + int(offset)
            failures.append((points[i], points[j], points[j] - points[i]))
    return pairs, count, failures


def _check_rows_exact(system: MoranSystem, points: Sequence[int], rows: range,
                      max_level: Optional[int]) -> Tuple[int, int, List[Tuple[int, int, int]]]:
    pairs, count, failures = 0, 0, []
    for i in rows:
        for j in range(i + 1, len(points)):
            pairs += 1
            ok, _ = zero_set_member(system, points[j] - points[i], max_level)
            if not ok:
                count += 1
                if len(failures) < MAX_REPORTED_FAILURES:
                    failures.append((points[i], points[j], points[j] - points[i]))
    return pairs, count, failures


def pairwise_orthogonal(system: MoranSystem, points: Sequence[int], threads: int = 1,
                        max_level: Optional[int] = None) -> OrthogonalityReport:
    """
    Exact orthogonality of {e_lambda} in L^2(mu)

    Every difference lambda' - lambda must be a zero of mu^ (of mu_n^ when
    max_level = n). Differences are reduced modulo B_K (K the largest
    level with B_K < 2^62) and tested row by row with int64 arithmetic;
    differences that vanish modulo B_K are tested on the exact integers.

    Args:
        system: Moran system
        points: Distinct integers (at least 2)
        threads: Worker threads over row blocks
        max_level: Restrict to the zeros of the level-n transform

    Returns:
        OrthogonalityReport (at most 100 failures are listed)
    """
    points = [int(p) for p in points]
    if len(points) < 2:
        raise ValidationError("need at least two points")
    if len(set(points)) != len(points):
        seen = set()
        duplicate = next(p for p in points if p in seen or seen.add(p))
        raise ValidationError(f"duplicate point {duplicate}", witness=duplicate)

    K = _residue_level(system)
    blocks = [range(s, min(s + ROW_BLOCK, len(points))) for s in range(0, len(points), ROW_BLOCK)]
    if K >= 1:
        residues = np.array([p % system.B(K) for p in points], dtype=np.int64)
        task = lambda rows: _check_rows(system, points, residues, K, rows, max_level)
    else:
        task = lambda rows: _check_rows_exact(system, points, rows, max_level)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, blocks))
    else:
        results = [task(rows) for rows in blocks]

    report = OrthogonalityReport(0, max_level=max_level)
    for pairs, count, failures in results:
        report.pairs_checked += pairs
        report.failure_count += count
        report.failures.extend(failures[:MAX_REPORTED_FAILURES - len(report.failures)])

    if report.passed:
        logger.info(f"Orthogonality: {report.pairs_checked} pairs, no failures")
    else:
        logger.warning(
            f"Orthogonality: {report.failure_count} of {report.pairs_checked} differences "
            f"outside the zero set, first {report.failures[0]}"
        )
    return report


# ==================== UNITARITY ====================

@dataclass
class UnitarityReport:
    matrix_dim: int
    max_offdiag: float
    max_diag_dev: float
    exact_residue_pass: bool
    tolerance: float = UNITARITY_TOLERANCE
    failing_pair: Optional[Tuple[int, int]] = None

    @property
    def passed(self) -> bool:
        return self.exact_residue_pass and self.max_offdiag <= self.tolerance \
            and self.max_diag_dev <= self.tolerance

    def __str__(self):
        return (f"UnitarityReport(dim={self.matrix_dim}, offdiag={self.max_offdiag:.3e}, "
                f"diag_dev={self.max_diag_dev:.3e}, exact={self.exact_residue_pass})")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matrix_dim": self.matrix_dim,
            "max_offdiag": self.max_offdiag,
            "max_diag_dev": self.max_diag_dev,
            "exact_residue_pass": self.exact_residue_pass,
            "passed": self.passed,
            "failing_pair": [str(v) for v in self.failing_pair] if self.failing_pair else None,
        }


def _gram_deviation(matrix: np.ndarray) -> Tuple[float, float]:
    gram = matrix.conj().T @ matrix
    diag = np.abs(np.diag(gram) - 1).max()
    offdiag = np.abs(gram - np.diag(np.diag(gram))).max() if len(gram) > 1 else 0.0
    return float(offdiag), float(diag)


def compatible_pair_check(system: MoranSystem, k: int, w: int) -> UnitarityReport:
    """
    Unitarity of (1/sqrt(q_k)) (exp(-2 pi i d w r_k l / b_k)) over d, l < q_k

    Exact test: for l != l' the residue w r_k (l - l') mod b_k is nonzero and
    q_k times it vanishes mod b_k (each off-diagonal geometric sum is zero).
    """
    if k < 1:
        raise ValidationError(f"level must be >= 1, got {k}")
    if w not in (1, -1):
        raise ValidationError(f"sign must be +1 or -1, got {w}")
    q, b, r = system.q(k), system.b(k), system.r(k)

    exact = True
    failing = None
    for l in range(q):
        for l2 in range(l + 1, q):
            residue = (w * r * (l - l2)) % b
            if residue == 0 or (q * residue) % b != 0:
                exact = False
                failing = (l, l2)
                break
        if not exact:
            break

    digits = np.arange(q)
    phases = np.outer(digits, w * r * digits) % b / b
    matrix = np.exp(-2j * np.pi * phases) / math.sqrt(q)
    offdiag, diag = _gram_deviation(matrix)
    return UnitarityReport(q, offdiag, diag, exact, failing_pair=failing)


def level_unitarity(system: MoranSystem, n: int, level_set: Sequence[int],
                    measure: Optional[AtomicMeasure] = None,
                    max_level: int = DEFAULT_MAX_LEVEL,
                    max_dim: int = MAX_MATRIX_DIM) -> UnitarityReport:
    """
    Unitarity of (1/sqrt(Q_n)) (exp(2 pi i a lambda)) over the atoms a of mu_n

    The exact part checks that every difference of the level set is a
    zero of mu_n^, which is equivalent to orthogonal columns.

    Args:
        system: Moran system
        n: Level
        level_set: Exactly Q_n distinct integers
        measure: Pre-built mu_n (built when omitted)
        max_level: Materialization cap
        max_dim: Largest matrix dimension
    """
    size = system.Q(n)
    level_set = [int(v) for v in level_set]
    if len(level_set) != size or len(set(level_set)) != size:
        raise ValidationError(f"level {n} needs exactly {size} distinct frequencies, got {len(set(level_set))}")
    if size > max_dim:
        raise ValidationError(f"matrix dimension {size} exceeds the limit {max_dim}")
    if measure is None:
        measure = level_measure(system, n, max_level)
    elif measure.level != n:
        raise ValidationError(f"measure is level {measure.level}, expected {n}")

    B = measure.denominator
    residues = np.array([v % B for v in level_set], dtype=object)
    numerators = measure.numerators.astype(object)
    phases = (np.outer(numerators, residues) % B).astype(np.float64) / B
    matrix = np.exp(2j * np.pi * phases) / math.sqrt(size)
    offdiag, diag = _gram_deviation(matrix)

    exact = pairwise_orthogonal(system, level_set, max_level=n) if size > 1 else None
    passed = exact is None or exact.passed
    failing = exact.failures[0][:2] if exact is not None and exact.failures else None

    report = UnitarityReport(size, offdiag, diag, passed, failing_pair=failing)
    logger.debug(f"Level {n} unitarity: {report}")
    return report


# ==================== COMPLETENESS ====================

@dataclass
class CompletenessProfile:
    """Partial sums of |mu^(xi + lambda_n)|^2 over included n <= index_cap"""
    xi_samples: List[float]
    partial_sums: List[List[float]]
    final_values: List[float]
    tail_totals: List[float]
    index_cap: int
    truncation: int

    def monotone(self) -> bool:
        return all(b >= a for sums in self.partial_sums for a, b in zip(sums, sums[1:]))

    def within_bound(self) -> bool:
        return all(v <= 1 + tail + 1e-12 for v, tail in zip(self.final_values, self.tail_totals))

    def rows(self) -> List[Tuple[float, int, float]]:
        """CSV rows (xi, count, partial_sum)"""
        return [
            (xi, count, value)
            for xi, sums in zip(self.xi_samples, self.partial_sums)
            for count, value in enumerate(sums, start=1)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "xi_samples": self.xi_samples,
            "final_values": self.final_values,
            "tail_totals": self.tail_totals,
            "index_cap": self.index_cap,
            "truncation": self.truncation,
            "monotone": self.monotone(),
            "within_bound": self.within_bound(),
        }


def completeness_profile(system: MoranSystem, spectrum: Spectrum, xi_samples: Sequence[float],
                         index_cap: int, K: int = 40, threads: int = 1) -> CompletenessProfile:
    """
    Accumulate sum |mu^(xi + lambda_n)|^2 for each sample xi in [0, 1)

    Args:
        system: Moran system of the spectrum
        spectrum: Frequency family
        xi_samples: Sample points in [0, 1)
        index_cap: Largest index N
        K: Factors evaluated beyond each frequency's top term index
        threads: Worker threads over samples

    Returns:
        CompletenessProfile
    """
    if spectrum.system != system:
        raise ValidationError("spectrum was built for a different system")
    if not xi_samples:
        raise ValidationError("need at least one xi sample")
    bad = [x for x in xi_samples if not 0 <= x < 1]
    if bad:
        raise ValidationError(f"xi samples must lie in [0, 1), got {bad[0]}")
    index_cap = min(index_cap, spectrum.max_index(index_cap))
    indices = spectrum.indices(index_cap)
    terms = [spectrum.terms(n) for n in indices]

    def accumulate(xi: float) -> Tuple[List[float], float]:
        xi0 = Fraction(xi)
        total, tail_total = 0.0, 0.0
        sums = []
        for term in terms:
            result = fourier_transform_terms(system, term, xi0, K)
            total += result.magnitude ** 2
            tail_total += 2 * result.tail_bound + result.tail_bound ** 2
            sums.append(total)
        return sums, tail_total

    if threads > 1 and len(xi_samples) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(accumulate, xi_samples))
    else:
        results = [accumulate(xi) for xi in xi_samples]

    profile = CompletenessProfile(
        list(xi_samples),
        [sums for sums, _ in results],
        [sums[-1] for sums, _ in results],
        [tail for _, tail in results],
        index_cap, K,
    )
    logger.info(
        f"Completeness over {len(indices)} frequencies: "
        f"min final {min(profile.final_values):.6f}"
    )
    return profile


@dataclass
class ParsevalReport:
    level: int
    sums: List[float]

    @property
    def max_deviation(self) -> float:
        return max(abs(s - 1) for s in self.sums)


def level_parseval(system: MoranSystem, n: int, xi_samples: Sequence[float],
                   level_set: Optional[Sequence[int]] = None) -> ParsevalReport:
    """
    sum over the level-n set of |mu_n^(xi + lambda)|^2 (exactly 1 for spectra of mu_n)

    The canonical level-n set is used when none is given.
    """
    if level_set is None:
        level_set = canonical_spectrum(system).level_points(n)
    sums = []
    for xi in xi_samples:
        xi0 = Fraction(xi)
        sums.append(sum(fourier_transform(system, xi0 + lam, n).magnitude ** 2 for lam in level_set))
    return ParsevalReport(n, sums)


# ==================== SEPARATION ====================

@dataclass
class SeparationReport:
    level: int
    min_distance: Fraction
    bound: int
    closest: Tuple[Fraction, int]
    integer_sum_zeros: int
    normalization: str = "T_n = B_n^-1 * sum x_i w_i rho_i, inside (-1, 1); distance to integer zeros of mu_n^"

    @property
    def passed(self) -> bool:
        return self.min_distance >= self.bound

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "min_distance": str(self.min_distance),
            "min_distance_float": float(self.min_distance),
            "bound": self.bound,
            "closest": [str(self.closest[0]), str(self.closest[1])],
            "integer_sum_zeros": self.integer_sum_zeros,
            "passed": self.passed,
            "normalization": self.normalization,
        }


def separation_check(system: MoranSystem, w: SignWord, n: int,
                     max_level: int = DEFAULT_MAX_LEVEL) -> SeparationReport:
    """
    Distance from the normalized sign-word sums T_n to the zeros of mu_n^

    Every normalized sum lies in (-1, 1), so only zeros of magnitude at most
    r_1 + 1 can be nearest. The report also counts the unnormalized integer
    sums that are themselves zeros, which is why that reading is rejected.
    """
    if not 1 <= n <= max_level:
        raise ValidationError(f"level must be in 1..{max_level}, got {n}")
    sums = sign_word_spectrum(system, w).level_points(n)
    B = system.B(n)

    reach = system.r(1) + 1
    zeros = [z for z in range(-reach, reach + 1) if z and zero_set_member(system, z, n)[0]]
    if not zeros:
        raise ValidationError(f"no zeros of the level-{n} transform within {reach}")

    best = None
    for s in sums:
        t = Fraction(s, B)
        for z in zeros:
            d = abs(t - z)
            if best is None or d < best[0]:
                best = (d, t, z)

    integer_hits = sum(1 for s in sums if s and zero_set_member(system, s, n)[0])
    report = SeparationReport(n, best[0], system.r(1) - 1, (best[1], best[2]), integer_hits)
    log = logger.info if report.passed else logger.warning
    log(f"Separation at level {n}: min distance {report.min_distance} (bound {report.bound})")
    return report


# ==================== TENSOR CONSISTENCY ====================

@dataclass
class TensorConsistencyReport:
    level: int
    level_pass: bool
    pair_passes: List[bool]

    @property
    def consistent(self) -> bool:
        return self.level_pass == all(self.pair_passes)


def tensor_consistency(system: MoranSystem, n: int, w: SignWord,
                       max_level: int = DEFAULT_MAX_LEVEL) -> TensorConsistencyReport:
    """level_unitarity on the sign-word level set against compatible_pair_check for k <= n"""
    level_set = sign_word_spectrum(system, w).level_points(n)
    level = level_unitarity(system, n, level_set, max_level=max_level)
    pairs = [compatible_pair_check(system, k, w.sign(k)).passed for k in range(1, n + 1)]
    return TensorConsistencyReport(n, level.passed, pairs)
