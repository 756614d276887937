"""Unbiased-bit extraction from words avoiding the marker pattern.

Words over {1..a} that contain no full occurrence of the marker pattern
(2 followed by t-1 ones) split into classes of equal probability under any
i.i.d. law: the class of a word is its symbol-count vector.  Within a class,
words are ranked lexicographically and the class size is decomposed into
powers of two; a word then maps to (number of bits, bit string, class index).
Conditioned on the bit count, the bit string is exactly uniform, and the
triple is injective, with a constructive inverse.

Pattern containment is *full* containment: an occurrence must fit entirely
inside the word, including one ending at its last position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .core import BitString, SymbolWord, check_word


@dataclass(frozen=True)
class PatternConfig:
    """Alphabet size and marker length; the pattern is 2 followed by
    ``marker_len - 1`` ones."""

    alphabet_size: int
    marker_len: int

    def __post_init__(self) -> None:
        if self.alphabet_size < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.alphabet_size}")
        if self.marker_len < 1:
            raise ValueError(f"marker length must be >= 1, got {self.marker_len}")

    @property
    def pattern(self) -> SymbolWord:
        return (2,) + (1,) * (self.marker_len - 1)


@dataclass(frozen=True)
class ExtractionTriple:
    """(bit count, extracted bits, class index); ``len(bits) == num_bits``."""

    num_bits: int
    bits: BitString
    class_id: int

    def __post_init__(self) -> None:
        if len(self.bits) != self.num_bits:
            raise ValueError("bit string length does not match bit count")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0/1")
        if self.class_id < 1:
            raise ValueError("class index must be >= 1")


def _advance(state: int, symbol: int) -> int:
    """Length of the longest suffix matching a prefix of the pattern.

    The caller treats a result equal to the marker length as a completed
    occurrence (dead for pattern-free words).
    """
    if symbol == 2:
        return 1
    if symbol == 1 and state:
        return state + 1
    return 0


def is_pattern_free(word: SymbolWord, cfg: PatternConfig) -> bool:
    """True iff no full occurrence of the pattern starts inside the word."""
    state = 0
    for s in word:
        state = _advance(state, s)
        if state == cfg.marker_len:
            return False
    return True


def count_vector(word: SymbolWord, alphabet_size: int) -> tuple[int, ...]:
    m = [0] * alphabet_size
    for s in word:
        if not 1 <= s <= alphabet_size:
            raise ValueError(f"symbol {s} outside 1..{alphabet_size}")
        m[s - 1] += 1
    return tuple(m)


def _check_counts(m: tuple[int, ...]) -> None:
    if len(m) < 2 or any(c < 0 for c in m):
        raise ValueError(f"bad count vector {m!r}")


@lru_cache(maxsize=None)
def _count_by_state(m: tuple[int, ...], state: int, t: int) -> int:
    if not any(m):
        return 1
    total = 0
    for c, cnt in enumerate(m, start=1):
        if not cnt:
            continue
        nxt = _advance(state, c)
        if nxt == t:
            continue
        total += _count_by_state(m[: c - 1] + (cnt - 1,) + m[c:], nxt, t)
    return total


def class_size(m: tuple[int, ...], cfg: PatternConfig) -> int:
    """Number of pattern-free words with count vector ``m``.

    Memoized recursion over (remaining counts, automaton state); intended
    for desk-scale counts.  Long words go through the closed-form route used
    by rank/extract, which agrees with this one (cross-checked in tests).
    """
    _check_counts(m)
    if len(m) != cfg.alphabet_size:
        raise ValueError("count vector length does not match alphabet size")
    return _count_by_state(tuple(m), 0, cfg.marker_len)


_FACTORIALS = [1, 1]


def _fact(n: int) -> int:
    while len(_FACTORIALS) <= n:
        _FACTORIALS.append(_FACTORIALS[-1] * len(_FACTORIALS))
    return _FACTORIALS[n]


@lru_cache(maxsize=200_000)
def _free_count(m: tuple[int, ...], t: int) -> int:
    """Pattern-free word count by inclusion-exclusion over marked occurrences.

    The pattern cannot overlap itself, so the alternating sum over r disjoint
    marked copies is exact: the r-th term places r copies among the leftover
    symbols (a binomial) and arranges the rest (a multinomial).  Their product
    changes by a small-integer ratio from one r to the next, so each term is
    one big-by-small multiply and divide.
    """
    n = sum(m)
    ones, twos = m[0], m[1]
    rmax = min(twos, ones // (t - 1)) if t > 1 else twos
    term = _fact(n)
    den_prod = 1
    for c in m:
        den_prod *= _fact(c)
    term //= den_prod
    total = term
    a_ones, b_twos, top = ones, twos, n
    for r in range(rmax):
        num = b_twos
        den = r + 1
        for d in range(t - 1):
            num *= a_ones - d
            den *= top - d
        term = term * num // den
        total += -term if (r & 1) == 0 else term
        a_ones -= t - 1
        b_twos -= 1
        top -= t - 1
    return total


def _completions(m: tuple[int, ...], state: int, t: int) -> int:
    """Pattern-free completions from a given automaton state.

    A completion starting in state s >= 1 is excluded exactly when it begins
    with t-s ones (finishing the pending occurrence); everything else reduces
    to the unconditioned count.
    """
    total = _free_count(m, t)
    if state:
        need = t - state
        if m[0] >= need:
            total -= _free_count((m[0] - need,) + m[1:], t)
    return total


def rank_in_class(word: SymbolWord, cfg: PatternConfig) -> int:
    """1-based lexicographic rank of ``word`` among pattern-free words with
    the same count vector."""
    word = check_word(word, cfg.alphabet_size)
    t = cfg.marker_len
    counts = list(count_vector(word, cfg.alphabet_size))
    state = 0
    rank = 1
    for sym in word:
        for c in range(1, sym):
            if not counts[c - 1]:
                continue
            nxt = _advance(state, c)
            if nxt == t:
                continue
            counts[c - 1] -= 1
            rank += _completions(tuple(counts), nxt, t)
            counts[c - 1] += 1
        state = _advance(state, sym)
        if state == t:
            raise ValueError("word contains the marker pattern")
        counts[sym - 1] -= 1
    return rank


def unrank_in_class(
    m: tuple[int, ...], cfg: PatternConfig, rank: int
) -> SymbolWord:
    """Inverse of rank_in_class on the class with count vector ``m``."""
    _check_counts(m)
    if len(m) != cfg.alphabet_size:
        raise ValueError("count vector length does not match alphabet size")
    t = cfg.marker_len
    total = _completions(tuple(m), 0, t)
    if not 1 <= rank <= total:
        raise ValueError(f"rank {rank} outside 1..{total}")
    counts = list(m)
    state = 0
    word: list[int] = []
    remaining = rank
    for _ in range(sum(m)):
        for c in range(1, cfg.alphabet_size + 1):
            if not counts[c - 1]:
                continue
            nxt = _advance(state, c)
            if nxt == t:
                continue
            counts[c - 1] -= 1
            below = _completions(tuple(counts), nxt, t)
            if remaining <= below:
                word.append(c)
                state = nxt
                break
            remaining -= below
            counts[c - 1] += 1
        else:  # pragma: no cover - rank was validated above
            raise AssertionError("unrank walk exhausted the alphabet")
    return tuple(word)


def class_index(m: tuple[int, ...]) -> int:
    """1-based position of ``m`` in lexicographic order over all count
    vectors with the same total; range 1..C(n+a-1, a-1)."""
    _check_counts(m)
    a = len(m)
    rem = sum(m)
    idx = 1
    for i in range(a - 1):
        parts = a - i - 1
        for v in range(m[i]):
            idx += math.comb(rem - v + parts - 1, parts - 1)
        rem -= m[i]
    return idx


def class_from_index(n: int, alphabet_size: int, index: int) -> tuple[int, ...]:
    """Inverse of class_index for words of length ``n``."""
    if n < 0 or alphabet_size < 2:
        raise ValueError("need n >= 0 and alphabet size >= 2")
    top = math.comb(n + alphabet_size - 1, alphabet_size - 1)
    if not 1 <= index <= top:
        raise ValueError(f"class index {index} outside 1..{top}")
    rem = n
    offset = index - 1
    out: list[int] = []
    for i in range(alphabet_size - 1):
        parts = alphabet_size - i - 1
        v = 0
        while True:
            block = math.comb(rem - v + parts - 1, parts - 1)
            if offset < block:
                break
            offset -= block
            v += 1
        out.append(v)
        rem -= v
    out.append(rem)
    return tuple(out)


def _powers_desc(d: int) -> list[int]:
    return [e for e in range(d.bit_length() - 1, -1, -1) if (d >> e) & 1]


def extract(word: SymbolWord, cfg: PatternConfig) -> ExtractionTriple:
    """Map a pattern-free word to its (bit count, bits, class index) triple.

    The class size d splits as a sum of distinct powers of two; ranks are
    assigned to the power-of-two sub-blocks in order, and within a sub-block
    of size 2^e the word's offset from the block's top rank is written out as
    e bits (most significant first).
    """
    word = check_word(word, cfg.alphabet_size)
    if not is_pattern_free(word, cfg):
        raise ValueError("word contains the marker pattern")
    m = count_vector(word, cfg.alphabet_size)
    rank = rank_in_class(word, cfg)
    partial = 0
    for e in _powers_desc(_completions(m, 0, cfg.marker_len)):
        partial += 1 << e
        if partial >= rank:
            offset = partial - rank
            bits = tuple((offset >> (e - 1 - i)) & 1 for i in range(e))
            return ExtractionTriple(e, bits, class_index(m))
    raise AssertionError("rank exceeded class size")  # pragma: no cover


def invert(n: int, cfg: PatternConfig, triple: ExtractionTriple) -> SymbolWord:
    """Reconstruct the unique length-``n`` word mapping to ``triple``.

    Raises ValueError when the triple is not realizable for (n, cfg).
    """
    m = class_from_index(n, cfg.alphabet_size, triple.class_id)
    partial = 0
    for e in _powers_desc(_completions(m, 0, cfg.marker_len)):
        partial += 1 << e
        if e == triple.num_bits:
            offset = 0
            for b in triple.bits:
                offset = (offset << 1) | b
            return unrank_in_class(m, cfg, partial - offset)
    raise ValueError(
        f"bit count {triple.num_bits} not realizable for class {triple.class_id}"
    )
