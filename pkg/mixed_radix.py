"""
Mixed-Radix Index Codec
Positive indices n <-> digit words sigma_1 ... sigma_k with sigma_j < q_j

    n = sigma_1 + sigma_2 q_1 + ... + sigma_k q_1 ... q_{k-1},   sigma_k != 0
"""

from dataclasses import dataclass
from typing import Iterator, Tuple

from lab_errors import ValidationError
from moran_system import MoranSystem


@dataclass(frozen=True)
class MixedRadixWord:
    """Digit word of a positive index; depth k = number of digits"""
    digits: Tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.digits)

    @property
    def last_nonzero(self) -> bool:
        return bool(self.digits) and self.digits[-1] != 0

    def nonzero_positions(self) -> Iterator[Tuple[int, int]]:
        """(position j, digit) for the nonzero digits, 1-indexed"""
        for j, digit in enumerate(self.digits, start=1):
            if digit:
                yield j, digit

    def __str__(self):
        return "(" + ",".join(str(d) for d in self.digits) + ")"


def encode_index(system: MoranSystem, n: int) -> MixedRadixWord:
    """
    Unique word of index n (n >= 1)

    Args:
        system: Provides the radices q_1, q_2, ...
        n: Positive index

    Returns:
        MixedRadixWord with a nonzero last digit
    """
    if n < 1:
        raise ValidationError(f"index must be >= 1, got {n}")
    digits = []
    j = 1
    while n:
        n, digit = divmod(n, system.q(j))
        digits.append(digit)
        j += 1
    return MixedRadixWord(tuple(digits))


def decode_word(system: MoranSystem, word: MixedRadixWord) -> int:
    """Inverse of encode_index; rejects out-of-range digits and a trailing zero"""
    if not word.digits:
        raise ValidationError("empty word encodes no positive index")
    if not word.last_nonzero:
        raise ValidationError(f"word {word} ends in zero", witness=word)
    n = 0
    for j, digit in enumerate(word.digits, start=1):
        if not 0 <= digit < system.q(j):
            raise ValidationError(
                f"digit {digit} at position {j} outside 0..{system.q(j) - 1}", witness=word
            )
        n += digit * system.Q(j - 1)
    return n


def index_depth(system: MoranSystem, n: int) -> int:
    """k_n: smallest k with n < Q_k (n >= 1)"""
    k = 0
    while system.Q(k) <= n:
        k += 1
    return k
