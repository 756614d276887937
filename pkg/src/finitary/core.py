"""Exact arithmetic primitives shared by every other module.

Probabilities are exact rationals (`fractions.Fraction`); the stopping rules
downstream compare rationals against dyadic partial sums with *strict*
inequalities, so no floating point is allowed anywhere near them.  Entropy is
the single floating-point quantity in the package and is calibration-grade
only (target relative error 1e-12; in practice ~1e-15 from double rounding).
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

Rational = Fraction

SymbolWord = tuple[int, ...]
BitString = tuple[int, ...]

_RATIONAL_RE = re.compile(r"[+-]?\d+(?:/\d+)?\Z")


def parse_rational(text: str) -> Fraction:
    """Parse ``"a/b"`` or ``"a"`` into an exact Fraction.

    Floating-point notation (``0.5``, ``1e-3``) is rejected.
    """
    s = text.strip()
    if not _RATIONAL_RE.fullmatch(s):
        raise ValueError(f"not an exact rational (want 'a/b' or 'a'): {text!r}")
    num, _, den = s.partition("/")
    if den:
        if int(den) == 0:
            raise ValueError(f"zero denominator in rational: {text!r}")
        return Fraction(int(num), int(den))
    return Fraction(int(num))


@dataclass(frozen=True)
class ProbabilityVector:
    """Distribution over symbols ``1..len(entries)``.

    Every entry is strictly positive and the entries sum to exactly 1; both
    facts are checked at construction.
    """

    entries: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("probability vector must be nonempty")
        total = Fraction(0)
        for i, value in enumerate(self.entries, start=1):
            if not isinstance(value, Fraction):
                raise ValueError(f"entry at index {i} is not an exact rational: {value!r}")
            if value == 0:
                raise ValueError(f"zero entry at index {i}")
            if value < 0:
                raise ValueError(f"negative entry at index {i}: {value}")
            total += value
        if total != 1:
            raise ValueError(f"entries sum to {total}, expected 1")

    @classmethod
    def parse(cls, text: str) -> "ProbabilityVector":
        """Parse a comma-separated list of rationals, e.g. ``"1/3,2/3"``."""
        parts = [p for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty probability vector")
        return cls(tuple(parse_rational(p) for p in parts))

    @property
    def size(self) -> int:
        return len(self.entries)

    def prob(self, symbol: int) -> Fraction:
        """Probability of ``symbol`` (1-based)."""
        if not 1 <= symbol <= len(self.entries):
            raise ValueError(f"symbol {symbol} outside 1..{len(self.entries)}")
        return self.entries[symbol - 1]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.entries)


def validate_distribution(entries: Iterable[Fraction]) -> ProbabilityVector:
    """Build a ProbabilityVector, rejecting non-positive entries and sums != 1."""
    return ProbabilityVector(tuple(entries))


def entropy(p: ProbabilityVector) -> float:
    """Entropy of ``p`` in nats; floating point, for calibration only."""
    return -sum(float(v) * math.log(float(v)) for v in p.entries)


def cumulative(p: ProbabilityVector) -> list[Fraction]:
    """Exact cumulative sums ``[0, p(1), p(1)+p(2), ..., 1]``.

    Strictly increasing because every entry is positive.
    """
    out = [Fraction(0)]
    for v in p.entries:
        out.append(out[-1] + v)
    return out


def check_word(symbols: Sequence[int], alphabet_size: int) -> SymbolWord:
    """Validate a word over the alphabet ``{1..alphabet_size}``.

    Accepts any integral symbol type (numpy ints included) and returns plain
    Python ints.
    """
    out = []
    for pos, s in enumerate(symbols):
        try:
            value = operator.index(s)
        except TypeError:
            raise ValueError(
                f"symbol {s!r} at position {pos} is not an integer"
            ) from None
        if isinstance(s, bool) or not 1 <= value <= alphabet_size:
            raise ValueError(
                f"symbol {s!r} at position {pos} outside 1..{alphabet_size}"
            )
        out.append(value)
    return tuple(out)


def check_bits(bits: Sequence[int]) -> BitString:
    """Validate a 0/1 string; returns plain Python ints."""
    out = []
    for pos, b in enumerate(bits):
        try:
            value = operator.index(b)
        except TypeError:
            raise ValueError(f"bit {b!r} at position {pos} is not 0 or 1") from None
        if isinstance(b, bool) or value not in (0, 1):
            raise ValueError(f"bit {b!r} at position {pos} is not 0 or 1")
        out.append(value)
    return tuple(out)


def parse_word(text: str, alphabet_size: int) -> SymbolWord:
    """Parse whitespace-separated 1-based symbols."""
    try:
        symbols = [int(tok) for tok in text.split()]
    except ValueError as exc:
        raise ValueError(f"malformed symbol stream: {exc}") from None
    return check_word(symbols, alphabet_size)


def parse_bits(text: str) -> BitString:
    """Parse bits given either contiguously (``"0110"``) or separated."""
    toks = text.split()
    if len(toks) > 1 or (toks and len(toks[0]) > 1):
        chars = "".join(toks)
    else:
        chars = text.strip()
    try:
        return check_bits([int(c) for c in chars])
    except ValueError:
        raise ValueError(f"malformed bit string: {text!r}") from None
