"""Marker-delimited block transform from one symbol stream to another.

The input stream is cut into blocks at markers (the pattern 2 followed by
t-1 ones).  Each block's interior word is squeezed into unbiased bits; one
simulator per block then reads bits to draw the block's worth of output
symbols.  All simulators run in lockstep, each advancing one bit position per
step; positions already consumed are skipped, and when several simulators
meet at a free position the rightmost one reads it while the others move on
(a queue-up).  A simulator that outruns its own block's bits drifts into the
blocks to its right.  The whole update is synchronous: every decision at a
step reads only the previous step's state.

The transform never sees the law that generated the input, only the stream
itself, so identical streams give identical outputs no matter their origin.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import ProbabilityVector, SymbolWord, check_word
from .dyadic import DyadicCursor
from .extractor import PatternConfig, extract

DEFAULT_MAX_WINDOW = 10**6


class WindowExhausted(RuntimeError):
    """The window cap cut off input that the schedule still needed."""


class UndeterminedIndex(LookupError):
    """The requested output index cannot be determined from the available input."""


class InvariantViolation(AssertionError):
    """A schedule invariant (disjoint consumption / lockstep) failed."""


@dataclass(frozen=True)
class BlockRecord:
    """One marker-delimited block.

    ``left_marker``/``right_marker`` are the absolute positions of the two
    delimiting markers; the block owns output indices
    ``left_marker < i <= right_marker``.  ``word`` is the interior with the
    left marker pattern removed, and ``bits`` the bit string extracted from
    it.
    """

    index: int
    left_marker: int
    right_marker: int
    word: SymbolWord
    bits: tuple[int, ...]

    @property
    def length(self) -> int:
        """Block length: number of output symbols this block must supply."""
        return self.right_marker - self.left_marker

    @property
    def word_length(self) -> int:
        return len(self.word)

    @property
    def bit_count(self) -> int:
        return len(self.bits)


def scan_markers(segment: Sequence[int], cfg: PatternConfig) -> list[int]:
    """Positions (0-based) where the full marker pattern fits and matches."""
    t = cfg.marker_len
    out = []
    n = len(segment)
    for i in range(n - t + 1):
        if segment[i] != 2:
            continue
        if all(segment[i + d] == 1 for d in range(1, t)):
            out.append(i)
    return out


def segment_blocks(segment: Sequence[int], cfg: PatternConfig) -> list[BlockRecord]:
    """Blocks between consecutive markers, with words and extracted bits.

    Fewer than two markers yield no complete block.
    """
    markers = scan_markers(segment, cfg)
    return blocks_from_markers(segment, markers, cfg)


def blocks_from_markers(
    segment: Sequence[int], markers: Sequence[int], cfg: PatternConfig
) -> list[BlockRecord]:
    blocks = []
    for k in range(len(markers) - 1):
        left, right = markers[k], markers[k + 1]
        word = tuple(segment[left + cfg.marker_len : right])
        triple = extract(word, cfg)
        blocks.append(
            BlockRecord(
                index=k,
                left_marker=left,
                right_marker=right,
                word=word,
                bits=triple.bits,
            )
        )
    return blocks


def next_position(
    j: int, m: int, blocks: Sequence[BlockRecord]
) -> tuple[int, int] | None:
    """Successor of bit position (j, m): next bit in block j, else the first
    bit of the next nonempty block.  None means the window has no successor.
    """
    v = blocks[j].bit_count
    if not (v > 0 and 1 <= m <= v):
        raise ValueError(f"invalid position ({j}, {m})")
    if m < v:
        return (j, m + 1)
    for j2 in range(j + 1, len(blocks)):
        if blocks[j2].bit_count > 0:
            return (j2, 1)
    return None


@dataclass(frozen=True)
class ScheduleResult:
    """Outcome of a schedule run.

    ``results[k]`` is block k's output word once its simulator succeeded;
    ``consumed[k]`` the (block, bit) positions it read, in order;
    ``read_bits[k]`` the corresponding bits; ``reach[k]`` the rightmost block
    index it read from.  Simulators that ran off the window's right edge
    appear in ``exited`` and have no result.
    """

    results: dict[int, SymbolWord]
    consumed: dict[int, tuple[tuple[int, int], ...]]
    read_bits: dict[int, tuple[int, ...]]
    reach: dict[int, int]
    exited: frozenset[int]
    steps: int
    invariant_checks: int


def run_schedule(
    blocks: Sequence[BlockRecord],
    q: ProbabilityVector,
    targets: Iterable[int],
) -> ScheduleResult:
    """Run the lockstep schedule until every target simulator succeeds or
    runs off the window.

    Simulators exist for every block index from min(targets) to the end of
    the window; indices below min(targets) cannot influence those at or above
    it.  Two-phase update: all decisions for a step read the previous step's
    positions and consumed set, then commit together.
    """
    targets = sorted(set(targets))
    if not targets:
        raise ValueError("no targets")
    nblocks = len(blocks)
    for pos, blk in enumerate(blocks):
        if blk.index != pos:
            raise ValueError("block indices must be contiguous from 0")
    if targets[0] < 0 or targets[-1] >= nblocks:
        raise ValueError(f"targets outside window blocks 0..{nblocks - 1}")

    flat_bits: list[int] = []
    flat_pos: list[tuple[int, int]] = []
    first_flat = [0] * (nblocks + 1)
    for j, blk in enumerate(blocks):
        first_flat[j] = len(flat_bits)
        flat_bits.extend(blk.bits)
        flat_pos.extend((j, m) for m in range(1, blk.bit_count + 1))
    total = len(flat_bits)
    first_flat[nblocks] = total
    flat_used = bytearray(total)

    sims = list(range(targets[0], nblocks))
    pos = {k: first_flat[k] for k in sims}
    cursors = {k: DyadicCursor(q, blocks[k].length) for k in sims}
    taken: dict[int, list[int]] = {k: [] for k in sims}
    frozen: dict[int, bool] = {k: False for k in sims}
    results: dict[int, SymbolWord] = {}
    reach: dict[int, int] = {}
    steps = 0
    checks = 0

    def running() -> list[int]:
        return [k for k in sims if not frozen[k] and pos[k] < total]

    while any(not frozen[k] and pos[k] < total for k in targets):
        steps += 1
        live = running()
        occupant: dict[int, int] = {}
        for k in live:
            p = pos[k]
            if k > occupant.get(p, -1):
                occupant[p] = k
        consumers = []
        movers = []
        for k in live:
            p = pos[k]
            if flat_used[p] or occupant[p] != k:
                movers.append(k)
            else:
                consumers.append(k)
        committed: set[int] = set()
        for k in consumers:
            p = pos[k]
            checks += 1
            if flat_used[p] or p in committed:
                raise InvariantViolation(
                    f"position {flat_pos[p]} consumed twice (simulator {k})"
                )
            committed.add(p)
            taken[k].append(p)
            cursors[k].feed(flat_bits[p])
            if cursors[k].successful:
                frozen[k] = True
                results[k] = tuple(cursors[k].emitted)
                reach[k] = flat_pos[p][0]
            else:
                movers.append(k)
        for p in committed:
            flat_used[p] = 1
        # Lockstep: in the flat position order, NEXT is +1, so advancing by
        # exactly one per step is structural; the falsifiable consequence
        # (strictly increasing reads per simulator) is checked at the end.
        for k in movers:
            pos[k] += 1

    exited = frozenset(k for k in sims if not frozen[k] and pos[k] >= total)
    consumed = {k: tuple(flat_pos[p] for p in taken[k]) for k in sims}
    read_bits = {k: tuple(flat_bits[p] for p in taken[k]) for k in sims}
    for k in sims:
        checks += 1
        if any(a >= b for a, b in zip(taken[k], taken[k][1:])):
            raise InvariantViolation(f"simulator {k} read out of order")
    return ScheduleResult(
        results=results,
        consumed=consumed,
        read_bits=read_bits,
        reach=reach,
        exited=exited,
        steps=steps,
        invariant_checks=checks,
    )


@dataclass(frozen=True)
class CodingReport:
    """Certificate that the output at ``index`` is a function of the input
    symbols within ``[left_marker, right_extent]``; ``radius`` is the
    certified window half-width max(index - left_marker, right_extent - index).
    """

    index: int
    block: int
    left_marker: int
    right_extent: int
    radius: int


@dataclass(frozen=True)
class MapResult:
    outputs: dict[int, int]
    reports: dict[int, CodingReport]
    undetermined: list[int]


def map_range(
    stream: Sequence[int],
    cfg: PatternConfig,
    q: ProbabilityVector,
    first: int,
    last: int,
    max_window: int = DEFAULT_MAX_WINDOW,
) -> MapResult:
    """Transform the output indices ``first..last`` (inclusive, 0-based).

    Indices whose enclosing block or schedule cannot be completed from the
    available input are reported undetermined.  Each index may look at most
    ``max_window`` symbols past itself; WindowExhausted is raised only when
    an index's schedule failed *and* the stream continues beyond that
    index's cap (so the cap, not the input, was the binding constraint).
    """
    x = check_word(stream, cfg.alphabet_size)
    if not 0 <= first <= last < len(x):
        raise ValueError(f"range {first}..{last} outside input 0..{len(x) - 1}")
    limit = last + 1 + max_window
    window = x[:limit] if limit < len(x) else x

    markers = scan_markers(window, cfg)
    if len(markers) < 2:
        return MapResult({}, {}, list(range(first, last + 1)))
    blocks = blocks_from_markers(window, markers, cfg)

    undetermined: list[int] = []
    per_block: dict[int, list[int]] = {}
    for i in range(first, last + 1):
        u = bisect_left(markers, i)
        if 1 <= u <= len(markers) - 1:
            per_block.setdefault(u - 1, []).append(i)
        else:
            undetermined.append(i)
    if not per_block:
        return MapResult({}, {}, undetermined)

    schedule = run_schedule(blocks, q, per_block.keys())
    outputs: dict[int, int] = {}
    reports: dict[int, CodingReport] = {}
    for k, indices in per_block.items():
        if k in schedule.results:
            word = schedule.results[k]
            left = markers[k]
            right = markers[schedule.reach[k] + 1] + cfg.marker_len
            for i in indices:
                outputs[i] = word[i - left - 1]
                reports[i] = CodingReport(
                    index=i,
                    block=k,
                    left_marker=left,
                    right_extent=right,
                    radius=max(i - left, right - i),
                )
        else:
            for i in indices:
                if i + max_window + 1 < len(x):
                    raise WindowExhausted(
                        f"cap of {max_window} symbols past index {i} exhausted "
                        f"before block {k} completed"
                    )
            undetermined.extend(indices)
    return MapResult(outputs, reports, sorted(undetermined))


def certified_radius(
    stream: Sequence[int],
    cfg: PatternConfig,
    q: ProbabilityVector,
    index: int,
    max_window: int = DEFAULT_MAX_WINDOW,
) -> int:
    """Certified coding radius at one index; raises UndeterminedIndex when the
    available input does not determine the output there."""
    result = map_range(stream, cfg, q, index, index, max_window=max_window)
    if index in result.reports:
        return result.reports[index].radius
    raise UndeterminedIndex(f"output at index {index} is undetermined")
