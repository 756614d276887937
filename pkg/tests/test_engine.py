from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finitary.core import ProbabilityVector, validate_distribution
from finitary.engine import (
    BlockRecord,
    UndeterminedIndex,
    WindowExhausted,
    certified_radius,
    map_range,
    next_position,
    run_schedule,
    scan_markers,
    segment_blocks,
)
from finitary.extractor import PatternConfig, extract

from oracles import naive_map, naive_schedule

FAIR = ProbabilityVector.parse("1/2,1/2")
Q13 = ProbabilityVector.parse("1/3,2/3")


def random_stream(seed, size, alphabet):
    rng = np.random.Generator(np.random.PCG64(seed))
    return [int(v) for v in rng.integers(1, alphabet + 1, size=size)]


def synthetic_block(index, length, bits, left=None):
    left = 10 * index if left is None else left
    return BlockRecord(
        index=index,
        left_marker=left,
        right_marker=left + length,
        word=(),
        bits=tuple(bits),
    )


class TestScanMarkers:
    def test_trailing_pattern_unconfirmable(self):
        assert scan_markers((2, 1, 1, 2, 1, 2), PatternConfig(2, 2)) == [0, 3]

    def test_t3(self):
        assert scan_markers((2, 1, 1, 2, 1, 1, 1), PatternConfig(2, 3)) == [0, 3]

    def test_no_marker_symbol(self):
        assert scan_markers((1, 1, 1), PatternConfig(2, 2)) == []

    def test_spacing_at_least_t(self):
        rng = np.random.Generator(np.random.PCG64(0))
        for t in (1, 2, 3):
            stream = [int(v) for v in rng.integers(1, 3, size=400)]
            marks = scan_markers(stream, PatternConfig(2, t))
            assert all(b - a >= t for a, b in zip(marks, marks[1:]))


class TestSegmentBlocks:
    def test_single_block_with_word(self):
        blocks = segment_blocks((2, 1, 3, 1, 2, 1), PatternConfig(3, 2))
        assert len(blocks) == 1
        blk = blocks[0]
        assert (blk.length, blk.word, blk.word_length) == (4, (3, 1), 2)
        assert blk.bits == extract((3, 1), PatternConfig(3, 2)).bits

    def test_adjacent_markers_empty_word(self):
        blocks = segment_blocks((2, 1, 1, 2, 1, 1, 1), PatternConfig(2, 3))
        assert len(blocks) == 1
        assert (blocks[0].length, blocks[0].word, blocks[0].bit_count) == (3, (), 0)

    def test_fewer_than_two_markers(self):
        assert segment_blocks((1, 2), PatternConfig(2, 2)) == []

    def test_words_never_contain_the_pattern(self):
        for seed in range(5):
            stream = random_stream(seed, 600, 2)
            for blk in segment_blocks(stream, PatternConfig(2, 2)):
                assert blk.length >= 2 and blk.word_length >= 0


class TestNextPosition:
    def setup_method(self):
        self.blocks = [
            synthetic_block(0, 2, []),
            synthetic_block(1, 2, []),
            synthetic_block(2, 2, []),
            synthetic_block(3, 2, []),
            synthetic_block(4, 2, []),
            synthetic_block(5, 2, [0, 1, 0]),
            synthetic_block(6, 2, []),
            synthetic_block(7, 2, [1, 1]),
        ]

    def test_within_block(self):
        assert next_position(5, 2, self.blocks) == (5, 3)

    def test_skips_empty_blocks(self):
        assert next_position(5, 3, self.blocks) == (7, 1)

    def test_window_boundary(self):
        assert next_position(7, 2, self.blocks) is None

    def test_invalid_position(self):
        with pytest.raises(ValueError):
            next_position(6, 1, self.blocks)


class TestRunSchedule:
    def test_single_block_self_sufficient(self):
        blocks = [BlockRecord(0, 0, 2, (), (0, 0, 1, 0))]
        res = run_schedule(blocks, FAIR, [0])
        assert res.results[0] == (1, 1)
        assert res.steps == 4
        assert res.consumed[0] == ((0, 1), (0, 2), (0, 3), (0, 4))
        assert res.read_bits[0] == (0, 0, 1, 0)
        assert res.reach[0] == 0
        assert res.exited == frozenset()
        assert len(res.results[0]) == blocks[0].length

    def test_queue_up_priority_to_rightmost(self):
        blocks = [
            synthetic_block(0, 2, []),
            synthetic_block(1, 2, []),
            synthetic_block(2, 2, [0, 0]),
        ]
        res = run_schedule(blocks, FAIR, [0, 1, 2])
        assert res.consumed[2] == ((2, 1), (2, 2))
        assert res.consumed[0] == () and res.consumed[1] == ()
        assert res.exited == frozenset({0, 1, 2})

    def test_block_length_equals_output_length(self):
        stream = random_stream(3, 2000, 3)
        blocks = segment_blocks(stream, PatternConfig(3, 2))
        res = run_schedule(blocks, FAIR, range(len(blocks)))
        for k, word in res.results.items():
            assert len(word) == blocks[k].length

    def test_disjoint_consumption(self):
        stream = random_stream(4, 3000, 3)
        blocks = segment_blocks(stream, PatternConfig(3, 2))
        res = run_schedule(blocks, FAIR, range(len(blocks)))
        seen = set()
        for k, positions in res.consumed.items():
            assert list(positions) == sorted(positions)
            for p in positions:
                assert p not in seen
                seen.add(p)
        assert res.invariant_checks > 0

    def test_validates_targets(self):
        blocks = [synthetic_block(0, 2, [0, 1])]
        with pytest.raises(ValueError):
            run_schedule(blocks, FAIR, [])
        with pytest.raises(ValueError):
            run_schedule(blocks, FAIR, [5])


class TestAgainstNaiveTranscription:
    @pytest.mark.parametrize(
        "seed,size,a,t,q",
        [
            (11, 10_000, 2, 4, FAIR),
            (12, 5_000, 3, 3, FAIR),
            (13, 4_000, 3, 3, Q13),
            (14, 2_000, 2, 2, Q13),
        ],
    )
    def test_schedule_matches(self, seed, size, a, t, q):
        stream = random_stream(seed, size, a)
        blocks = segment_blocks(stream, PatternConfig(a, t))
        targets = range(len(blocks))
        res = run_schedule(blocks, q, targets)
        done, consumed, reach, exited, steps = naive_schedule(blocks, q, targets)
        assert res.results == done
        assert res.consumed == consumed
        assert res.reach == reach
        assert res.exited == exited
        assert res.steps == steps

    def test_full_map_matches_naive(self):
        stream = random_stream(11, 10_000, 2)
        result = map_range(stream, PatternConfig(2, 4), FAIR, 0, len(stream) - 1)
        assert result.outputs == naive_map(stream, 2, 4, FAIR)

    def test_full_map_matches_naive_ternary(self):
        stream = random_stream(21, 4_000, 3)
        result = map_range(stream, PatternConfig(3, 3), FAIR, 0, len(stream) - 1)
        assert result.outputs == naive_map(stream, 3, 3, FAIR)


class TestDegenerateAndWideConfigs:
    def test_single_symbol_marker(self):
        # t=1: every occurrence of symbol 2 is a marker; block words contain
        # no 2 at all.
        stream = random_stream(78, 1200, 4)
        q = validate_distribution([Fraction(1)])
        res = map_range(stream, PatternConfig(4, 1), q, 0, len(stream) - 1)
        assert res.outputs == naive_map(stream, 4, 1, q)
        assert len(res.outputs) > 500
        assert set(res.outputs.values()) == {1}

    def test_single_symbol_target(self):
        # b=1: the output is constant but the simulators still consume bits.
        stream = random_stream(31, 900, 3)
        q = validate_distribution([Fraction(1)])
        res = map_range(stream, PatternConfig(3, 2), q, 0, len(stream) - 1)
        assert len(res.outputs) > 500
        assert set(res.outputs.values()) == {1}

    def test_ternary_target(self):
        stream = random_stream(77, 4000, 3)
        q = ProbabilityVector.parse("3/4,1/8,1/8")
        res = map_range(stream, PatternConfig(3, 4), q, 0, len(stream) - 1)
        assert res.outputs == naive_map(stream, 3, 4, q)
        assert set(res.outputs.values()) == {1, 2, 3}

    def test_four_symbol_source(self):
        stream = random_stream(78, 1200, 4)
        res = map_range(stream, PatternConfig(4, 2), FAIR, 0, len(stream) - 1)
        assert res.outputs == naive_map(stream, 4, 2, FAIR)
        assert len(res.outputs) > 500


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 10**6),
    st.integers(2, 3),
    st.integers(1, 3),
    st.sampled_from(["1/2,1/2", "1/3,2/3", "1/4,1/4,1/2"]),
    st.integers(60, 140),
)
def test_map_matches_naive_transcription_property(seed, a, t, q_text, size):
    q = ProbabilityVector.parse(q_text)
    stream = random_stream(seed, size, a)
    res = map_range(stream, PatternConfig(a, t), q, 0, size - 1)
    assert res.outputs == naive_map(stream, a, t, q)


class TestMapRange:
    def test_no_markers_all_undetermined(self):
        res = map_range([1, 1, 1, 1], PatternConfig(2, 2), FAIR, 0, 3)
        assert res.outputs == {} and res.undetermined == [0, 1, 2, 3]

    def test_leading_and_trailing_undetermined(self):
        stream = random_stream(7, 4000, 3)
        cfg = PatternConfig(3, 2)
        res = map_range(stream, cfg, FAIR, 0, len(stream) - 1)
        marks = scan_markers(stream, cfg)
        determined = sorted(res.outputs)
        assert set(res.undetermined).isdisjoint(res.outputs)
        assert set(res.undetermined) | set(determined) == set(range(len(stream)))
        # Everything at or before the first marker is undetermined.
        assert all(i > marks[0] for i in determined)
        assert all(i in res.undetermined for i in range(marks[0] + 1))

    def test_outputs_in_target_alphabet(self):
        stream = random_stream(8, 3000, 3)
        res = map_range(stream, PatternConfig(3, 2), Q13, 0, len(stream) - 1)
        assert res.outputs and set(res.outputs.values()) <= {1, 2}

    def test_single_block_window(self):
        # Two markers only; inside the block is determined when bits suffice,
        # outside is not.
        stream = [2, 1, 1, 2, 2, 1, 3, 3, 1, 2, 3, 1, 2, 1, 1, 1]
        cfg = PatternConfig(3, 3)
        marks = scan_markers(stream, cfg)
        assert len(marks) == 2
        res = map_range(stream, cfg, FAIR, 0, len(stream) - 1)
        inside = set(range(marks[0] + 1, marks[1] + 1))
        if res.outputs:
            assert set(res.outputs) <= inside
        assert set(res.undetermined) >= set(range(len(stream))) - inside

    def test_range_validation(self):
        with pytest.raises(ValueError):
            map_range([1, 2], PatternConfig(2, 2), FAIR, 0, 5)
        with pytest.raises(ValueError):
            map_range([1, 3], PatternConfig(2, 2), FAIR, 0, 1)


class TestWindowCap:
    # One block between two markers whose word yields too few bits for its
    # own length; the only difference between the two cases is whether the
    # stream continues past the per-index cap.
    STARVED = [2, 1, 1, 1] + [3, 3, 2, 3, 3] + [2, 1, 1, 1]

    def test_cap_bound_raises(self):
        stream = self.STARVED + [3] * 500
        cfg = PatternConfig(3, 4)
        res_uncapped = map_range(stream, cfg, FAIR, 5, 6)
        assert res_uncapped.outputs == {}
        assert res_uncapped.undetermined == [5, 6]  # input-bound: undetermined
        with pytest.raises(WindowExhausted):
            map_range(stream, cfg, FAIR, 5, 6, max_window=30)

    def test_input_bound_is_undetermined(self):
        res = map_range(self.STARVED, PatternConfig(3, 4), FAIR, 5, 6, max_window=30)
        assert res.outputs == {}
        assert res.undetermined == [5, 6]


class TestCertifiedRadius:
    def test_radius_covers_block_membership(self):
        stream = random_stream(9, 3000, 3)
        cfg = PatternConfig(3, 2)
        res = map_range(stream, cfg, FAIR, 0, len(stream) - 1)
        marks = scan_markers(stream, cfg)
        for i, report in list(res.reports.items())[:200]:
            assert report.radius >= i - report.left_marker
            assert report.left_marker in marks
            assert report.radius >= 1
            assert report.right_extent >= marks[report.block + 1] + cfg.marker_len

    def test_single_index_matches_bulk(self):
        stream = random_stream(9, 2000, 3)
        cfg = PatternConfig(3, 2)
        res = map_range(stream, cfg, FAIR, 0, len(stream) - 1)
        some = sorted(res.outputs)[100]
        assert certified_radius(stream, cfg, FAIR, some) == res.reports[some].radius

    def test_undetermined_raises(self):
        with pytest.raises(UndeterminedIndex):
            certified_radius([1, 1, 1, 1], PatternConfig(2, 2), FAIR, 0)


class TestEquivariance:
    @pytest.mark.parametrize("seed", range(8))
    def test_shift_commutes(self, seed):
        stream = random_stream(seed, 1200, 3)
        cfg = PatternConfig(3, 3)
        out = map_range(stream, cfg, FAIR, 0, len(stream) - 1).outputs
        shifted = map_range(stream[1:], cfg, FAIR, 0, len(stream) - 2).outputs
        common = set(shifted) & {i - 1 for i in out}
        assert common  # some co-determined indices exist
        for i in common:
            assert shifted[i] == out[i + 1]


class TestLeftIndependence:
    @pytest.mark.parametrize("seed", range(6))
    def test_adding_left_simulators_changes_nothing(self, seed):
        stream = random_stream(100 + seed, 3000, 3)
        blocks = segment_blocks(stream, PatternConfig(3, 3))
        assert len(blocks) > 8
        full = run_schedule(blocks, FAIR, range(len(blocks)))
        tail = run_schedule(blocks, FAIR, range(5, len(blocks)))
        for k in range(5, len(blocks)):
            assert full.results.get(k) == tail.results.get(k)
            assert full.consumed[k] == tail.consumed[k]
            assert full.reach.get(k) == tail.reach.get(k)


class TestSourceUniversality:
    def test_no_source_distribution_parameter(self):
        import inspect

        for fn in (map_range, run_schedule, segment_blocks, scan_markers):
            names = set(inspect.signature(fn).parameters)
            assert not names & {"p", "source", "source_distribution"}

    def test_identical_streams_identical_outputs(self):
        # The same symbols, arrived at via different generators, map identically.
        rng_a = np.random.Generator(np.random.PCG64(1))
        draws = rng_a.integers(1, 4, size=2500)
        stream_a = [int(v) for v in draws]
        stream_b = [int(str(v)) for v in list(draws)]  # independent reconstruction
        cfg = PatternConfig(3, 2)
        res_a = map_range(stream_a, cfg, FAIR, 0, 2499)
        res_b = map_range(stream_b, cfg, FAIR, 0, 2499)
        assert res_a.outputs == res_b.outputs
        assert res_a.reports == res_b.reports
        assert res_a.undetermined == res_b.undetermined
