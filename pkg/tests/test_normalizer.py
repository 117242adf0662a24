import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ewm_direct
from symed.errors import ConfigError, DegenerateVarianceError, StreamCorruptionError
from symed.normalizer import NormalizerState, standardize, standardize_segment, update

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def test_first_update_initializes():
    s = update(NormalizerState(alpha=0.3), 1.0)
    assert (s.ewma, s.ewmv, s.count) == (1.0, 1.0, 1)


def test_second_update_applies_recurrences():
    s = NormalizerState(alpha=0.5, ewma=1.0, ewmv=1.0, count=1)
    s = update(s, 3.0)
    assert s.ewma == 2.0
    assert s.ewmv == 1.0  # 0.5 * (3-2)**2 + 0.5 * 1
    assert s.count == 2


@given(c=finite, v=st.floats(min_value=1e-6, max_value=1e6), alpha=st.floats(min_value=0.001, max_value=0.999))
def test_zero_deviation_decays_variance(c, v, alpha):
    s = update(NormalizerState(alpha=alpha, ewma=c, ewmv=v, count=5), c)
    assert s.ewma == pytest.approx(c, rel=1e-15, abs=1e-300)
    assert s.ewmv == pytest.approx((1 - alpha) * v, rel=1e-12)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(StreamCorruptionError):
        update(NormalizerState(), bad)


@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5, math.nan])
def test_alpha_range(alpha):
    with pytest.raises(ConfigError):
        NormalizerState(alpha=alpha)


def test_alpha_one_allowed_and_variance_floored():
    s = NormalizerState(alpha=1.0).update(4.0).update(7.0)
    assert s.ewma == 7.0
    assert s.ewmv == 1e-300
    assert s.standardize(7.0) == 0.0


def test_standardize_examples():
    assert standardize(NormalizerState(ewma=2.0, ewmv=1.0, count=3), 3.0) == 1.0
    assert standardize(NormalizerState(ewma=0.0, ewmv=4.0, count=3), 3.0) == 1.5
    assert standardize(NormalizerState(ewma=-7.25, ewmv=9.0, count=3), -7.25) == 0.0


def test_standardize_needs_an_observation():
    with pytest.raises(DegenerateVarianceError):
        standardize(NormalizerState(), 1.0)


def test_standardize_zero_variance_errors():
    with pytest.raises(DegenerateVarianceError):
        standardize(NormalizerState(ewma=0.0, ewmv=0.0, count=2), 1.0)


def test_standardize_segment_examples():
    s = NormalizerState(ewma=0.0, ewmv=1.0, count=1)
    np.testing.assert_array_equal(standardize_segment(s, [1, 2, 3]), [1, 2, 3])
    s = NormalizerState(ewma=2.0, ewmv=4.0, count=1)
    np.testing.assert_array_equal(standardize_segment(s, [2, 4]), [0, 1])
    assert standardize_segment(s, []).size == 0


@given(mu=finite, v=st.floats(min_value=1e-3, max_value=1e6), k=st.floats(min_value=-100, max_value=100))
def test_standardize_affine_consistent(mu, v, k):
    s = NormalizerState(ewma=mu, ewmv=v, count=2)
    assert standardize(s, mu + k * math.sqrt(v)) == pytest.approx(k, rel=1e-9, abs=1e-6 * (1 + abs(mu) / math.sqrt(v)))


@settings(max_examples=50, deadline=None)
@given(
    values=st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=1, max_size=80),
    alpha=st.floats(min_value=0.001, max_value=0.99),
)
def test_iterative_matches_unrolled(values, alpha):
    s = NormalizerState(alpha=alpha)
    it_a, it_v = [], []
    for t in values:
        s = s.update(t)
        it_a.append(s.ewma)
        it_v.append(s.ewmv)
        assert s.ewmv > 0
    da, dv = ewm_direct(values, alpha)
    scale = max(1.0, max(abs(x) for x in values))
    np.testing.assert_allclose(it_a, da, rtol=1e-12, atol=1e-12 * scale)
    np.testing.assert_allclose(it_v, dv, rtol=1e-10, atol=1e-12 * scale**2)


def test_state_is_immutable():
    s = NormalizerState()
    with pytest.raises(Exception):
        s.alpha = 0.5
