import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symed.compressor import (
    CompressorConfig,
    OnlineCompressor,
    compress_offline,
    compress_stream,
    endpoints_to_pieces,
    error_bound,
    fit_error,
)
from symed.datasets import breakpoints, random_walk, sine, zigzag
from symed.errors import ConfigError, InvalidInputError, StreamCorruptionError


def brute_fit_error(seg):
    m = len(seg) - 1
    return sum((seg[0] + (seg[m] - seg[0]) * h / m - seg[h]) ** 2 for h in range(m + 1))


class TestFitError:
    def test_examples(self):
        assert fit_error([0, 1, 2]) == 0.0
        assert fit_error([0, 2, 0]) == 4.0

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
    def test_two_points_exact(self, a, b):
        assert fit_error([a, b]) == 0.0

    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=40))
    def test_matches_direct_sum(self, seg):
        assert fit_error(seg) == pytest.approx(brute_fit_error(seg), rel=1e-9, abs=1e-9)

    def test_too_short(self):
        with pytest.raises(InvalidInputError):
            fit_error([1.0])


class TestOnline:
    def test_constant_stream_hits_length_bound(self):
        comp = OnlineCompressor(tol=0.5, len_max=10)
        emitted = [(i, comp.feed(0.0)) for i in range(30)]
        hits = [(i, ep) for i, ep in emitted if ep is not None]
        # buffer first exceeds 10 points when sample 10 (the 11th) arrives
        assert hits[0][0] == 10
        assert hits[0][1].value == 0.0
        assert hits[0][1].tick == 9

    def test_outlier_triggers_emission(self):
        comp = OnlineCompressor(tol=0.01, alpha=0.01)
        out = [comp.feed(t) for t in [0, 1, 2, 100]]
        assert out[:3] == [None, None, None]
        assert out[3] == (2.0, 2)
        assert comp.buffer == [2.0, 100.0]

    def test_never_emits_below_three_points(self):
        comp = OnlineCompressor(tol=1e-9)
        assert comp.feed(0.0) is None
        assert comp.feed(1e9) is None

    def test_start_value_recorded(self):
        comp = OnlineCompressor()
        comp.feed(3.5)
        assert comp.start_value == 3.5

    @pytest.mark.parametrize("bad", [math.nan, math.inf])
    def test_non_finite(self, bad):
        comp = OnlineCompressor()
        comp.feed(1.0)
        with pytest.raises(StreamCorruptionError):
            comp.feed(bad)

    @pytest.mark.parametrize(
        "kw", [dict(tol=0.0), dict(tol=-1.0), dict(len_max=1), dict(bound_mode="cubic"), dict(alpha=0.0)]
    )
    def test_bad_config(self, kw):
        with pytest.raises(ConfigError):
            CompressorConfig(**kw)

    def test_squared_bound_mode(self):
        assert error_bound(5, 0.5, "linear") == 1.5
        assert error_bound(5, 0.5, "squared") == 0.75
        rng = np.random.default_rng(3)
        ts = sine(600, 80, 2.0, noise=0.1, rng=rng)
        linear = list(compress_stream(ts, tol=0.5))
        squared = list(compress_stream(ts, tol=0.5, bound_mode="squared"))
        assert len(squared) >= len(linear)

    def test_flush_closes_the_chain(self):
        ts = np.arange(20.0)
        eps = list(compress_stream(ts, tol=0.1))
        assert eps == [(19.0, 19)]
        assert list(compress_stream(ts, tol=0.1, flush=False)) == []

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), tol=st.sampled_from([0.05, 0.2, 0.5, 1.0]),
           len_max=st.sampled_from([None, 5, 17]))
    def test_chain_consistency(self, seed, tol, len_max):
        ts = random_walk(300, np.random.default_rng(seed))
        eps = list(compress_stream(ts, CompressorConfig(tol=tol, len_max=len_max)))
        ticks = [e.tick for e in eps]
        assert ticks == sorted(set(ticks)) and ticks[0] > 0
        for e in eps:
            assert e.value == ts[e.tick]
        pieces = endpoints_to_pieces(ts[0], eps)
        prev_v, prev_t = ts[0], 0
        for p, e in zip(pieces, eps):
            assert p.len == e.tick - prev_t
            assert p.inc == e.value - prev_v
            prev_v, prev_t = e.value, e.tick
        assert ticks[-1] == len(ts) - 1

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), tol=st.sampled_from([0.05, 0.3, 1.0]),
           len_max=st.sampled_from([None, 8]))
    def test_emitted_segments_respect_bound(self, seed, tol, len_max):
        """Each emitted segment passed its last check, made when its endpoint arrived."""
        ts = sine(400, 50, 3.0, noise=0.3, rng=np.random.default_rng(seed))
        comp = OnlineCompressor(tol=tol, len_max=len_max)
        states = []
        prev = 0
        for t in ts:
            ep = comp.feed(t)
            states.append(comp.normalizer)
            if ep is None:
                continue
            seg = ts[prev : ep.tick + 1]
            prev = ep.tick
            if len(seg) > 2:
                z = states[ep.tick].standardize_segment(seg)
                assert fit_error(z) <= error_bound(len(seg), tol)
            if len_max is not None:
                assert len(seg) <= len_max


class TestOffline:
    def test_linear_series_single_piece(self):
        ts = 0.3 * np.arange(51) - 2.0
        pieces = compress_offline(ts, 0.1)
        assert len(pieces) == 1
        assert pieces[0].len == 50
        assert pieces[0].inc == pytest.approx(ts[50] - ts[0])

    def test_corner(self):
        assert compress_offline([0.0, 1.0, 0.0], 1e-12) == [(1.0, 1.0), (1.0, -1.0)]

    def test_too_short(self):
        with pytest.raises(InvalidInputError):
            compress_offline([1.0], 0.1)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), tol=st.sampled_from([0.01, 0.1, 0.5, 2.0]),
           len_max=st.sampled_from([None, 4, 30]), mode=st.sampled_from(["linear", "squared"]))
    def test_pieces_cover_series_within_bound(self, seed, tol, len_max, mode):
        ts = random_walk(250, np.random.default_rng(seed))
        z = (ts - ts.mean()) / ts.std()
        pieces = compress_offline(z, tol, len_max, mode)
        assert sum(p.len for p in pieces) == len(z) - 1
        i = 0
        for p in pieces:
            j = i + int(p.len)
            assert p.inc == pytest.approx(z[j] - z[i], abs=1e-12)
            assert fit_error(z[i : j + 1]) <= error_bound(j - i + 1, tol, mode) + 1e-12
            if len_max is not None:
                assert j - i + 1 <= len_max
            i = j


def test_online_offline_agree_on_stationary_series():
    rng = np.random.default_rng(11)
    ts = zigzag(3000, rng)
    z = (ts - ts.mean()) / ts.std()
    off = np.cumsum([p.len for p in compress_offline(z, 0.1)]).astype(int)
    on = [e.tick for e in compress_stream(ts, tol=0.1)]
    skip = 200
    assert [t for t in on if t > skip] == [int(t) for t in off if t > skip]
    assert set(on[:-1]) <= set(breakpoints(ts))


def test_online_work_is_linear_in_stream_length():
    rng = np.random.default_rng(5)
    ts = sine(40_000, 120, 2.0, noise=0.05, rng=rng)

    def timed(n):
        best = math.inf
        for _ in range(3):
            t0 = time.perf_counter()
            for _ in compress_stream(ts[:n], tol=0.4):
                pass
            best = min(best, time.perf_counter() - t0)
        return best

    ratio = timed(20_000) / timed(10_000)
    assert 1.3 < ratio < 3.5
