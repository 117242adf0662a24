import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symed.compressor import compress_stream, endpoints_to_pieces
from symed.datasets import random_walk
from symed.digitizer import SymbolString
from symed.errors import CorruptStateError, InvalidInputError
from symed.reconstructor import (
    inverse_compress,
    inverse_digitize,
    quantize_lengths,
    reconstruct_from_pieces,
    reconstruct_from_symbols,
)

lengths = st.lists(st.floats(min_value=1.0, max_value=50.0), min_size=1, max_size=200)


def test_inverse_digitize_examples():
    C = [(2.0, 1.0), (3.0, -1.0)]
    assert inverse_digitize("aba", C) == [(2.0, 1.0), (3.0, -1.0), (2.0, 1.0)]
    assert inverse_digitize(SymbolString([1]), C) == [(3.0, -1.0)]
    assert inverse_digitize("", C) == []


def test_inverse_digitize_unknown_label():
    with pytest.raises(CorruptStateError):
        inverse_digitize("ac", [(2.0, 1.0), (3.0, -1.0)])


class TestQuantize:
    def test_examples(self):
        assert quantize_lengths([1.5, 1.5]) == [2, 1]
        assert quantize_lengths([3.0, 4.0]) == [3, 4]
        assert quantize_lengths([0.4, 0.4, 0.4]) == [1, 1, 1]
        assert quantize_lengths([2.5]) == [3]

    def test_rejects_non_positive(self):
        with pytest.raises(InvalidInputError):
            quantize_lengths([1.0, 0.0])

    @given(lengths)
    def test_cumulative_drift_bounded(self, lens):
        q = quantize_lengths(lens)
        assert all(isinstance(x, int) and x >= 1 for x in q)
        # every prefix stays within half a sample of the true total
        drift = np.cumsum(q) - np.cumsum(lens)
        assert np.all(np.abs(drift) <= 0.5 + 1e-9)

    @given(st.lists(st.integers(1, 100), max_size=50))
    def test_integers_unchanged(self, lens):
        assert quantize_lengths([float(x) for x in lens]) == lens


class TestInverseCompress:
    def test_example(self):
        r = inverse_compress([(3, 3.0)], 1.0)
        np.testing.assert_array_equal(r.values, [1.0, 2.0, 3.0, 4.0])
        assert r.start_value == 1.0

    def test_two_pieces(self):
        r = reconstruct_from_pieces([(2, 2.0), (1, -5.0)], 0.0)
        np.testing.assert_array_equal(r.values, [0.0, 1.0, 2.0, -3.0])
        assert r.source_kind == "fromPieces"

    def test_no_pieces(self):
        assert len(inverse_compress([], 7.0)) == 1

    def test_non_integer_length(self):
        with pytest.raises(InvalidInputError):
            inverse_compress([(1.5, 1.0)], 0.0)

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.integers(1, 30), st.floats(-1e3, 1e3)), max_size=40), st.floats(-1e3, 1e3))
    def test_length_and_continuity(self, pieces, start):
        r = inverse_compress(pieces, start)
        assert len(r) == 1 + sum(p[0] for p in pieces)
        assert r.values[0] == start
        # each piece ends exactly on the running sum of increments
        idx, end = 0, start
        for m, inc in pieces:
            idx += m
            end += inc
            assert r.values[idx] == end


def test_pieces_round_trip_recovers_endpoints():
    ts = random_walk(500, np.random.default_rng(0))
    eps = list(compress_stream(ts, tol=0.3))
    r = reconstruct_from_pieces(endpoints_to_pieces(ts[0], eps), ts[0])
    assert len(r) == len(ts)
    for e in eps:
        assert r.values[e.tick] == pytest.approx(e.value, abs=1e-9)


def test_from_symbols():
    r = reconstruct_from_symbols("aab", [(1.5, 1.0), (2.0, -2.0)], 0.0)
    # lengths 1.5, 1.5, 2.0 quantize to 2, 1, 2
    np.testing.assert_array_equal(r.values, [0.0, 0.5, 1.0, 2.0, 1.0, 0.0])
    assert r.source_kind == "fromSymbols"
    assert np.asarray(r).shape == (6,)
