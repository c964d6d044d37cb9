import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aefault.errors import (
    ConfigError,
    DataError,
    ParameterError,
    UndefinedCorrelationError,
    UnfillableSignalError,
)
from aefault.preprocessing import (
    NormalizationParams,
    PreprocessConfig,
    Records,
    add_time_features,
    apply_normalization,
    clean,
    correlation,
    fill_unobserved,
    fit_normalization,
    impute,
    normalize_values,
    parse_timestamp,
    prepare_series,
    read_metadata,
    read_records,
    resample,
    select_signals,
    synthesize_missing_signal,
    time_features,
    window_array,
    windowize,
    write_metadata,
    write_records,
)
from aefault.timeseries import RawRecord, RegularSeries, SignalKind, SignalMeta

MONDAY_MARCH = 1614556800  # 2021-03-01 00:00 UTC


def series_of(cols, start=0, rate=60, mask=None):
    values = np.array(cols, dtype=float).T
    if mask is None:
        mask = np.isnan(values)
    return RegularSeries(start, rate, values, mask)


# cleaning ------------------------------------------------------------------


def test_clean_filters_and_keeps_order():
    recs = [RawRecord(t, 0, float(t)) for t in (1, 2, 3, 4, 5)]
    assert [r.timestamp for r in clean(recs, 3)] == [3, 4, 5]
    assert clean(recs, 0) == recs
    assert clean(recs, 99) == []
    assert clean(recs, None) is recs


def test_clean_columnar():
    rec = Records([5, 1, 7], [0, 0, 0], [1.0, 2.0, 3.0])
    assert clean(rec, 5).timestamp.tolist() == [5, 7]


# correlation and selection ---------------------------------------------------


def test_correlation_examples():
    assert correlation([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert correlation([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert correlation([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)


def test_correlation_zero_variance():
    with pytest.raises(UndefinedCorrelationError):
        correlation([1, 1, 1], [1, 2, 3])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=3, max_size=30), st.integers(0, 10**6))
def test_correlation_bounded(xs, seed):
    x = np.array(xs)
    y = np.random.default_rng(seed).normal(size=x.size)
    if x.std() < 1e-6:
        return
    assert -1 - 1e-12 <= correlation(x, y) <= 1 + 1e-12


def test_select_drops_duplicate():
    s = series_of([[1, 2, 3, 5], [1, 2, 3, 5], [4, 1, 3, 0]])
    out, dropped = select_signals(s, 0.95)
    assert out.names == ["signal_0", "signal_2"]
    assert dropped[0].signal.name == "signal_1" and dropped[0].correlated_with.name == "signal_0"
    assert "rho" in dropped[0].reason


def test_select_keeps_lowest_of_correlated_group():
    base = np.linspace(0, 1, 20)
    s = series_of([base * 3 + 1, base, -base, np.sin(np.arange(20.0))])
    out, dropped = select_signals(s, 0.95)
    assert out.names == ["signal_0", "signal_3"]
    assert {d.signal.name for d in dropped} == {"signal_1", "signal_2"}


def test_select_nothing_dropped():
    rng = np.random.default_rng(1)
    s = series_of(rng.normal(size=(4, 200)))
    out, dropped = select_signals(s, 0.95)
    assert out.n_signals == 4 and dropped == []


def test_select_skips_constant_signal():
    s = series_of([[1, 2, 3], [5, 5, 5], [2, 4, 7]])
    out, _ = select_signals(s, 0.95)
    assert "signal_1" in out.names


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.5, 0.99))
def test_select_leaves_no_correlated_pair(seed, cutoff):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(3, 50))
    cols = np.vstack([z, z[0] + 0.1 * rng.normal(size=50), z[1] * -2 + 0.05 * rng.normal(size=50)])
    out, _ = select_signals(series_of(cols), cutoff)
    rho = np.corrcoef(out.values.T)
    off = rho[~np.eye(out.n_signals, dtype=bool)]
    assert np.all(np.abs(off) < cutoff)


def test_select_requires_imputed_series():
    with pytest.raises(DataError):
        select_signals(series_of([[1, np.nan, 3], [1, 2, 3]]), 0.9)


# resampling ------------------------------------------------------------------

META3 = [
    SignalMeta(0, "num"),
    SignalMeta(1, "flag", SignalKind.BOOLEAN),
    SignalMeta(2, "count", SignalKind.COUNTER),
]


def test_resample_examples():
    recs = [
        RawRecord(5, 0, 1.0),
        RawRecord(50, 0, 3.0),
        RawRecord(10, 1, 0.0),
        RawRecord(30, 1, 1.0),
        RawRecord(1, 2, 100.0),
        RawRecord(2, 2, 101.0),
        RawRecord(3, 2, 102.0),
    ]
    s = resample(recs, META3, 60, (0, 120))
    assert s.values[0].tolist() == [2.0, 1.0, 100.0]
    assert np.isnan(s.values[1]).all() and s.mask[1].all()


def test_resample_ignores_out_of_span(caplog):
    recs = [RawRecord(-1, 0, 9.0), RawRecord(0, 0, 1.0), RawRecord(120, 0, 9.0)]
    with caplog.at_level("WARNING"):
        s = resample(recs, META3[:1], 60, (0, 120))
    assert s.values[:, 0][0] == 1.0 and s.n_rows == 2
    assert "2 record" in caplog.text


def test_resample_unknown_signal():
    with pytest.raises(DataError):
        resample([RawRecord(0, 5, 1.0)], META3, 60, (0, 60))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_resample_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    k = 200
    rec = Records(rng.integers(0, 600, k), rng.integers(0, 3, k), rng.normal(size=k).round(3))
    perm = rng.permutation(k)
    a = resample(rec, META3, 60, (0, 600))
    b = resample(rec.take(perm), META3, 60, (0, 600))
    assert a.equals(b)


# imputation --------------------------------------------------------------------


def test_impute_example():
    s = impute(series_of([[np.nan, 5, np.nan, 7, np.nan]]))
    assert s.values[:, 0].tolist() == [6, 5, 5, 7, 7]
    assert s.mask[:, 0].tolist() == [True, False, True, False, True]


def test_impute_leading_only():
    assert impute(series_of([[np.nan, np.nan, 9]])).values[:, 0].tolist() == [9, 9, 9]


def test_impute_no_gaps_identity():
    s = series_of([[1.0, 2.0, 3.0]])
    assert impute(s).equals(s)


def test_impute_unfillable():
    with pytest.raises(UnfillableSignalError):
        impute(series_of([[np.nan, np.nan]]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.one_of(st.none(), st.floats(-50, 50)), min_size=1, max_size=40))
def test_impute_idempotent(cells):
    if all(c is None for c in cells):
        return
    col = [np.nan if c is None else c for c in cells]
    once = impute(series_of([col]))
    assert impute(once).equals(once)
    assert not once.has_gaps()


def test_synthesize_missing_signal():
    assert synthesize_missing_signal((0.0, 0.0), 3, 1).tolist() == [0.0, 0.0, 0.0]
    a = synthesize_missing_signal((10.0, 1.0), 10000, 5)
    np.testing.assert_array_equal(a, synthesize_missing_signal((10.0, 1.0), 10000, 5))
    assert abs(a.mean() - 10) < 0.05 and abs(a.std() - 1) < 0.05
    with pytest.raises(ParameterError):
        synthesize_missing_signal((0.0, -1.0), 3, 0)


def test_fill_unobserved():
    s = series_of([[np.nan, np.nan, np.nan], [1.0, np.nan, 2.0]])
    out = fill_unobserved(s, {"signal_0": (3.0, 0.0)})
    assert out.values[:, 0].tolist() == [3.0, 3.0, 3.0] and out.mask[:, 0].all()
    with pytest.raises(UnfillableSignalError):
        fill_unobserved(s, {})


# calendar features ---------------------------------------------------------------


def test_time_features_monday_march():
    f = time_features(np.array([MONDAY_MARCH, MONDAY_MARCH + 3600]))
    assert f[0].tolist() == [3, 0, 0]
    assert f[1].tolist() == [3, 1, 0]


def test_time_features_against_datetime():
    from datetime import datetime, timezone

    rng = np.random.default_rng(3)
    ts = rng.integers(0, 4_000_000_000, 500)
    f = time_features(ts)
    for t, row in zip(ts.tolist(), f):
        d = datetime.fromtimestamp(t, timezone.utc)
        assert row.tolist() == [d.month, d.hour, d.weekday()]


def test_add_time_features_appends_three():
    s = series_of([[1.0] * 4], start=MONDAY_MARCH)
    out = add_time_features(s)
    assert out.n_signals == 4 and out.names[1:] == ["month", "hour", "weekday"]
    assert out.values[0, 1:].tolist() == [3, 0, 0]
    assert add_time_features(s, ("hour",)).names == ["signal_0", "hour"]


def test_time_features_config_validation():
    with pytest.raises(ConfigError):
        PreprocessConfig(time_features=("minute",))


# normalization -------------------------------------------------------------------


def test_normalization_examples():
    p = fit_normalization(series_of([[2, 4, 6], [5, 5, 5]]))
    assert p.minimum.tolist() == [2, 5] and p.maximum.tolist() == [6, 5]
    assert normalize_values(np.array([[4, 123.0]]), p).tolist() == [[0.5, 0.0]]
    assert normalize_values(np.array([[8, 5.0]]), p)[0, 0] == 1.5


def test_normalization_dimension_mismatch():
    p = NormalizationParams(np.zeros(2), np.ones(2))
    with pytest.raises(ParameterError):
        normalize_values(np.zeros((1, 3)), p)


def test_normalization_json_round_trip():
    p = NormalizationParams(np.array([1.0, 2.0]), np.array([3.0, 2.0]))
    q = NormalizationParams.from_dict(json.loads(json.dumps(p.to_dict())))
    np.testing.assert_array_equal(q.minimum, p.minimum)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_normalized_training_data_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    s = series_of(rng.normal(size=(3, 30)) * 10)
    out = apply_normalization(s, fit_normalization(s))
    assert out.values.min() >= 0 and out.values.max() <= 1


# windows ---------------------------------------------------------------------------


def test_window_counts():
    rows = 54 * 24 * 60
    assert window_array(np.zeros((rows, 1)), 10, 10).shape[0] == 7776
    assert len(windowize(series_of([np.arange(10.0)]), 10)) == 1
    assert len(windowize(series_of([np.arange(25.0)]), 10, 10)) == 2
    assert windowize(series_of([np.arange(9.0)]), 10) == []


def test_window_layout_matches_flatten():
    s = series_of([np.arange(6.0), 10 + np.arange(6.0)])
    wins = windowize(s, 3, 3)
    assert wins[1].start_index == 3
    assert wins[1].data.tolist() == [3, 4, 5, 13, 14, 15]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(1, 20))
def test_non_overlapping_windows_partition_rows(T, w):
    s = series_of([np.arange(float(T))])
    covered = [int(v) for fw in windowize(s, w) for v in fw.data]
    assert covered == list(range(w * (T // w)))


# files and pipeline ----------------------------------------------------------------


def test_parse_timestamp_forms():
    assert parse_timestamp("1614556800") == MONDAY_MARCH
    assert parse_timestamp("2021-03-01T00:00:00Z") == MONDAY_MARCH
    assert parse_timestamp("2021-03-01T01:00:00+01:00") == MONDAY_MARCH
    with pytest.raises(DataError):
        parse_timestamp("yesterday")


def test_records_round_trip(tmp_path):
    meta = META3
    rec = Records([0, 30, 61], [0, 1, 2], [1.5, 1.0, 7.0])
    write_metadata(tmp_path / "m.json", meta)
    assert read_metadata(tmp_path / "m.json") == meta
    for name in ("r.csv", "r.jsonl"):
        write_records(tmp_path / name, rec, meta, header={"config_hash": "abc"})
        back = read_records(tmp_path / name, meta)
        assert back.timestamp.tolist() == [0, 30, 61] and back.value.tolist() == [1.5, 1.0, 7.0]


def test_read_records_rfc3339_and_unknown(tmp_path, caplog):
    p = tmp_path / "r.csv"
    p.write_text("timestamp,signal,value\n2021-03-01T00:00:00Z,num,1\n0,ghost,2\n")
    with caplog.at_level("WARNING"):
        rec = read_records(p, META3)
    assert rec.timestamp.tolist() == [MONDAY_MARCH]
    assert "skipped 1" in caplog.text


def test_read_records_missing_column(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("time,signal,value\n0,num,1\n")
    with pytest.raises(DataError):
        read_records(p, META3)


def test_prepare_series_pipeline():
    meta = [SignalMeta(0, "a"), SignalMeta(1, "b"), SignalMeta(2, "c")]
    recs = []
    for t in range(0, 600, 20):
        recs.append(RawRecord(MONDAY_MARCH + t, 0, float(t % 7)))
        recs.append(RawRecord(MONDAY_MARCH + t, 1, 2.0 * (t % 7)))
        recs.append(RawRecord(MONDAY_MARCH + t, 2, float((t * 13) % 5)))
    out = prepare_series(recs, meta, PreprocessConfig(), (MONDAY_MARCH, MONDAY_MARCH + 600))
    assert out.series.names == ["a", "c", "month", "hour", "weekday"]
    assert [d.signal.name for d in out.dropped] == ["b"]
    assert not out.series.has_gaps()
