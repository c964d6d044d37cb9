import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aefault.errors import ConfigError, DimensionError
from aefault.timeseries import (
    FeatureWindow,
    RegularSeries,
    SignalKind,
    SignalMeta,
    flatten,
    rows_for_span,
    stack_windows,
    unflatten,
)


def test_flatten_is_signal_major():
    fw = flatten([[1, 2], [3, 4]])
    assert fw.data.tolist() == [1, 3, 2, 4]
    assert fw.w == 2 and fw.n_signals == 2


def test_flatten_single_row_is_identity():
    assert flatten([[5.0, 6.0, 7.0]]).data.tolist() == [5.0, 6.0, 7.0]


def test_flatten_index_map():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(10, 37))
    data = flatten(m).data
    for i in range(37):
        for k in range(10):
            assert data[i * 10 + k] == m[k, i]


def test_unflatten_inverse_example():
    assert unflatten(np.array([1, 3, 2, 4.0]), 2, 2).tolist() == [[1, 2], [3, 4]]


def test_unflatten_default_input_size():
    assert unflatten(np.arange(370.0), 10, 37).shape == (10, 37)


def test_unflatten_length_mismatch():
    with pytest.raises(DimensionError):
        unflatten(np.arange(5.0), 2, 2)


def test_flatten_rejects_non_finite():
    with pytest.raises(DimensionError):
        flatten([[1.0, np.nan]])


@settings(max_examples=50, deadline=None)
@given(
    arrays(
        np.float64,
        st.tuples(st.integers(1, 12), st.integers(1, 12)),
        elements=st.floats(-1e6, 1e6, allow_nan=False),
    )
)
def test_flatten_round_trip(m):
    w, n = m.shape
    np.testing.assert_array_equal(unflatten(flatten(m), w, n), m)
    fw = FeatureWindow(0, w, m.T.reshape(-1))
    np.testing.assert_array_equal(flatten(unflatten(fw, w, n)).data, fw.data)


@given(st.integers(0, 10**7), st.integers(1, 3600))
def test_rows_for_span(span, rate):
    assert rows_for_span(span, rate) == span // rate


def test_counter_increment_must_be_positive():
    with pytest.raises(ConfigError):
        SignalMeta(0, "c", SignalKind.COUNTER, increment=0)
    assert SignalMeta(0, "c", SignalKind.COUNTER).increment == 1


def test_series_rejects_sparse_ids():
    with pytest.raises(ConfigError):
        RegularSeries(0, 60, np.zeros((2, 2)), np.zeros((2, 2), bool), (SignalMeta(0, "a"), SignalMeta(2, "b")))


def test_series_is_read_only_and_rows_shift_start():
    s = RegularSeries(100, 60, np.arange(6.0).reshape(3, 2), np.zeros((3, 2), bool))
    with pytest.raises(ValueError):
        s.values[0, 0] = 1.0
    part = s.rows(1, 3)
    assert part.start == 160 and part.n_rows == 2
    assert part.timestamps().tolist() == [160, 220]


def test_columns_renumber_ids():
    meta = tuple(SignalMeta(i, f"s{i}") for i in range(3))
    s = RegularSeries(0, 60, np.zeros((2, 3)), np.zeros((2, 3), bool), meta)
    sub = s.columns([0, 2])
    assert [m.id for m in sub.signals] == [0, 1]
    assert sub.names == ["s0", "s2"]


def test_stack_windows():
    a = flatten([[1, 2], [3, 4]])
    b = flatten([[5, 6], [7, 8]], start_index=2)
    assert stack_windows([a, b]).shape == (2, 4)
