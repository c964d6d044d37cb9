"""Turn raw irregular sensor records into normalized feature windows.

The steps run in this order: cleaning, kind-aware resampling to a regular
grid, forward-fill imputation, correlation-based signal selection, calendar
features, min-max normalization and windowing.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    ParameterError,
    UndefinedCorrelationError,
    UnfillableSignalError,
)
from .timeseries import (
    FeatureWindow,
    RawRecord,
    RegularSeries,
    SignalKind,
    SignalMeta,
    check_dense_ids,
    rows_for_span,
)

log = logging.getLogger(__name__)

TIME_FEATURES = ("month", "hour", "weekday")


@dataclass(frozen=True)
class PreprocessConfig:
    rate_seconds: int = 60
    window: int = 10
    stride: Optional[int] = None
    correlation_cutoff: float = 0.95
    cleaning_start: Optional[int] = None
    add_time_features: bool = True
    time_features: tuple = TIME_FEATURES  # which calendar columns, when added

    def __post_init__(self) -> None:
        if self.stride is None:
            object.__setattr__(self, "stride", self.window)
        if self.rate_seconds < 1 or self.window < 1 or self.stride < 1:
            raise ConfigError("rate_seconds, window and stride must all be >= 1")
        if not 0.0 < self.correlation_cutoff <= 1.0:
            raise ConfigError("correlation_cutoff must lie in (0, 1]")
        object.__setattr__(self, "time_features", tuple(self.time_features))
        unknown = set(self.time_features) - set(TIME_FEATURES)
        if unknown:
            raise ConfigError(f"unknown time features {sorted(unknown)}; choose from {TIME_FEATURES}")


@dataclass(frozen=True, eq=False)
class NormalizationParams:
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.minimum, dtype=np.float64)
        hi = np.asarray(self.maximum, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("min and max must be vectors of equal length")
        if np.any(lo > hi):
            raise ParameterError("normalization min exceeds max")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    def to_dict(self) -> dict:
        return {"min": self.minimum.tolist(), "max": self.maximum.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationParams":
        return cls(np.array(d["min"], dtype=np.float64), np.array(d["max"], dtype=np.float64))


# ---------------------------------------------------------------------------
# raw records
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Records:
    """Columnar batch of raw records; iterating yields :class:`RawRecord`."""

    timestamp: np.ndarray
    signal: np.ndarray
    value: np.ndarray

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamp, dtype=np.int64)
        sig = np.asarray(self.signal, dtype=np.int64)
        val = np.asarray(self.value, dtype=np.float64)
        if not (ts.shape == sig.shape == val.shape) or ts.ndim != 1:
            raise DimensionError("record columns must be 1-D and of equal length")
        object.__setattr__(self, "timestamp", ts)
        object.__setattr__(self, "signal", sig)
        object.__setattr__(self, "value", val)

    def __len__(self) -> int:
        return self.timestamp.size

    def __iter__(self) -> Iterator[RawRecord]:
        for t, s, v in zip(self.timestamp.tolist(), self.signal.tolist(), self.value.tolist()):
            yield RawRecord(t, s, v)

    def take(self, idx) -> "Records":
        return Records(self.timestamp[idx], self.signal[idx], self.value[idx])

    @classmethod
    def from_list(cls, records: Iterable[RawRecord]) -> "Records":
        records = list(records)
        return cls(
            np.fromiter((r.timestamp for r in records), np.int64, len(records)),
            np.fromiter((r.signal for r in records), np.int64, len(records)),
            np.fromiter((r.value for r in records), np.float64, len(records)),
        )

    def to_list(self) -> list[RawRecord]:
        return list(self)


RecordsLike = Union[Records, Sequence[RawRecord]]


def as_records(records: RecordsLike) -> Records:
    return records if isinstance(records, Records) else Records.from_list(records)


def clean(records: RecordsLike, cleaning_start: Optional[int]):
    """Drop records before ``cleaning_start``; order is preserved."""
    if cleaning_start is None:
        return records
    if isinstance(records, Records):
        return records.take(records.timestamp >= cleaning_start)
    return [r for r in records if r.timestamp >= cleaning_start]


# ---------------------------------------------------------------------------
# resampling and imputation
# ---------------------------------------------------------------------------


def resample(
    records: RecordsLike,
    meta: Sequence[SignalMeta],
    rate_seconds: int,
    span: tuple[int, int],
) -> RegularSeries:
    """Aggregate records onto a regular grid, leaving empty cells as NaN.

    Numeric signals take the mean of the interval ``[t, t + r)``, booleans
    the maximum and counters the minimum. Records outside ``span`` are
    ignored and counted in a warning.
    """
    check_dense_ids(meta)
    rec = as_records(records)
    start, end = int(span[0]), int(span[1])
    n_rows = rows_for_span(end - start, rate_seconds)
    n = len(meta)

    row = np.floor_divide(rec.timestamp - start, rate_seconds)
    inside = (rec.timestamp >= start) & (row < n_rows)
    known = (rec.signal >= 0) & (rec.signal < n)
    n_out = int((~inside).sum())
    if n_out:
        log.warning("resample: ignored %d record(s) outside the span", n_out)
    if (~known).any():
        raise DataError(f"{int((~known).sum())} record(s) reference unknown signal ids")

    # canonical order makes floating-point sums independent of input order
    order = np.lexsort((rec.value, rec.timestamp, rec.signal))
    order = order[inside[order]]
    row, sig, val = row[order], rec.signal[order], rec.value[order]
    cell = row * n + sig

    size = n_rows * n
    count = np.bincount(cell, minlength=size).astype(np.float64)
    out = np.full(size, np.nan)
    kinds = np.array([m.kind.value for m in meta])
    col_kind = kinds[sig]

    numeric = col_kind == SignalKind.NUMERIC.value
    sums = np.bincount(cell[numeric], weights=val[numeric], minlength=size)
    hit = count > 0
    num_cols = np.tile(kinds == SignalKind.NUMERIC.value, n_rows)
    sel = hit & num_cols
    out[sel] = sums[sel] / count[sel]

    for kind, reducer, init in (
        (SignalKind.BOOLEAN, np.maximum, -np.inf),
        (SignalKind.COUNTER, np.minimum, np.inf),
    ):
        these = col_kind == kind.value
        if not these.any():
            continue
        acc = np.full(size, init)
        reducer.at(acc, cell[these], val[these])
        sel = hit & np.tile(kinds == kind.value, n_rows)
        out[sel] = acc[sel]

    values = out.reshape(n_rows, n)
    return RegularSeries(
        start=start,
        rate_seconds=rate_seconds,
        values=values,
        mask=np.isnan(values),
        signals=tuple(meta),
    )


def impute(series: RegularSeries) -> RegularSeries:
    """Forward-fill gaps; leading gaps take the median of the observed values.

    Cells flagged in ``series.mask`` count as missing whatever they hold, so
    re-imputing an imputed series is a no-op.
    """
    values = np.array(series.values, dtype=np.float64)
    missing = series.mask | np.isnan(values)
    T = values.shape[0]
    for i in range(values.shape[1]):
        obs = ~missing[:, i]
        if T and not obs.any():
            raise UnfillableSignalError(
                f"signal {series.signals[i].name!r} has no observed values"
            )
        if obs.all():
            continue
        last = np.where(obs, np.arange(T), -1)
        np.maximum.accumulate(last, out=last)
        col = values[:, i]
        filled = np.where(last >= 0, col[np.maximum(last, 0)], np.median(col[obs]))
        values[:, i] = filled
    return replace(series, values=values, mask=missing)


def synthesize_missing_signal(train_stats: tuple[float, float], length: int, seed) -> np.ndarray:
    """Draw ``length`` i.i.d. normal samples for a signal that was never observed."""
    mean, std = train_stats
    if std < 0:
        raise ParameterError(f"standard deviation must be >= 0, got {std}")
    return np.random.default_rng(seed).normal(mean, std, size=int(length))


def fill_unobserved(
    series: RegularSeries, stats: dict[str, tuple[float, float]], seed: int = 0
) -> RegularSeries:
    """Replace columns without any observation by synthetic normal samples."""
    values = np.array(series.values)
    mask = np.array(series.mask)
    rng = np.random.default_rng(seed)
    for i, sig in enumerate(series.signals):
        if series.n_rows and np.isnan(values[:, i]).all():
            if sig.name not in stats:
                raise UnfillableSignalError(
                    f"signal {sig.name!r} is never observed and has no fallback statistics"
                )
            values[:, i] = synthesize_missing_signal(stats[sig.name], series.n_rows, rng)
            mask[:, i] = True
    return replace(series, values=values, mask=mask)


# ---------------------------------------------------------------------------
# signal selection
# ---------------------------------------------------------------------------


def correlation(x, y) -> float:
    """Pearson correlation with population moments."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise DimensionError("correlation needs two equal-length vectors of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(np.mean(dx * dx)))
    sy = math.sqrt(float(np.mean(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    return float(np.mean(dx * dy)) / (sx * sy)


@dataclass(frozen=True)
class DroppedSignal:
    signal: SignalMeta
    correlated_with: SignalMeta
    rho: float

    @property
    def reason(self) -> str:
        return (
            f"|rho|={abs(self.rho):.4f} with {self.correlated_with.name!r} "
            f"(id {self.correlated_with.id})"
        )


def correlation_matrix(values: np.ndarray) -> np.ndarray:
    """Pairwise correlation; entries involving constant columns are NaN."""
    v = np.asarray(values, dtype=np.float64)
    d = v - v.mean(axis=0)
    sd = np.sqrt(np.mean(d * d, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        cov = d.T @ d / v.shape[0]
        rho = cov / np.outer(sd, sd)
    rho[:, sd == 0] = np.nan
    rho[sd == 0, :] = np.nan
    return rho


def select_signals(series: RegularSeries, cutoff: float = 0.95):
    """Drop signals highly correlated with a lower-id signal that was kept."""
    if not 0.0 < cutoff <= 1.0:
        raise ParameterError("cutoff must lie in (0, 1]")
    if series.has_gaps():
        raise DataError("select_signals needs an imputed series")
    rho = correlation_matrix(series.values)
    kept: list[int] = []
    dropped: list[DroppedSignal] = []
    for i in range(series.n_signals):
        hit = next(
            (j for j in kept if not np.isnan(rho[i, j]) and abs(rho[i, j]) >= cutoff), None
        )
        if hit is None:
            kept.append(i)
        else:
            dropped.append(DroppedSignal(series.signals[i], series.signals[hit], float(rho[i, hit])))
    if dropped:
        log.info("select_signals: dropped %s", ", ".join(d.signal.name for d in dropped))
    return series.columns(kept), dropped


# ---------------------------------------------------------------------------
# calendar features, normalization, windows
# ---------------------------------------------------------------------------


def time_features(timestamps: np.ndarray) -> np.ndarray:
    """(month 1-12, hour 0-23, weekday 0-6 with Monday = 0) in UTC."""
    ts = np.asarray(timestamps, dtype=np.int64)
    months = ts.astype("datetime64[s]").astype("datetime64[M]").astype(np.int64)
    month = months % 12 + 1
    hour = (ts // 3600) % 24
    weekday = (ts // 86400 + 3) % 7  # 1970-01-01 was a Thursday
    return np.column_stack([month, hour, weekday]).astype(np.float64)


def add_time_features(series: RegularSeries, names: Sequence[str] = TIME_FEATURES) -> RegularSeries:
    """Append the chosen calendar columns (in ``TIME_FEATURES`` order)."""
    cols = [k for k, name in enumerate(TIME_FEATURES) if name in names]
    extra = time_features(series.timestamps()).reshape(series.n_rows, 3)[:, cols]
    n = series.n_signals
    signals = series.signals + tuple(
        SignalMeta(n + k, TIME_FEATURES[c]) for k, c in enumerate(cols)
    )
    return replace(
        series,
        values=np.hstack([series.values, extra]),
        mask=np.hstack([series.mask, np.zeros((series.n_rows, len(cols)), dtype=bool)]),
        signals=signals,
    )


def fit_normalization(train: RegularSeries) -> NormalizationParams:
    if train.n_rows == 0:
        raise ParameterError("cannot fit normalization on an empty series")
    return NormalizationParams(train.values.min(axis=0), train.values.max(axis=0))


def normalize_values(values: np.ndarray, params: NormalizationParams) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != params.minimum.size:
        raise ParameterError(
            f"normalization fitted on {params.minimum.size} signals, got {values.shape[-1]}"
        )
    span = params.maximum - params.minimum
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (values - params.minimum) / safe, 0.0)


def apply_normalization(series: RegularSeries, params: NormalizationParams) -> RegularSeries:
    """Min-max scale with training parameters; values are not clipped."""
    return replace(series, values=normalize_values(series.values, params))


def window_starts(n_rows: int, w: int, stride: int) -> np.ndarray:
    if w < 1 or stride < 1:
        raise ParameterError("window and stride must be >= 1")
    if n_rows < w:
        return np.zeros(0, dtype=np.int64)
    return np.arange(0, n_rows - w + 1, stride, dtype=np.int64)


def window_array(values: np.ndarray, w: int, stride: int) -> np.ndarray:
    """(B, w*n) array of flattened windows in signal-major order."""
    values = np.asarray(values, dtype=np.float64)
    starts = window_starts(values.shape[0], w, stride)
    if starts.size == 0:
        return np.zeros((0, w * values.shape[1]))
    idx = starts[:, None] + np.arange(w)[None, :]
    blocks = values[idx]  # (B, w, n)
    return blocks.transpose(0, 2, 1).reshape(starts.size, -1)


def windowize(series: RegularSeries, w: int, stride: Optional[int] = None) -> list[FeatureWindow]:
    stride = w if stride is None else stride
    starts = window_starts(series.n_rows, w, stride)
    flat = window_array(series.values, w, stride)
    return [FeatureWindow(int(s), w, row) for s, row in zip(starts, flat)]


# ---------------------------------------------------------------------------
# pipeline glue
# ---------------------------------------------------------------------------


@dataclass
class Prepared:
    """Regular, imputed, un-normalized series plus what selection removed."""

    series: RegularSeries
    dropped: list = field(default_factory=list)


def prepare_series(
    records: RecordsLike,
    meta: Sequence[SignalMeta],
    config: PreprocessConfig,
    span: tuple[int, int],
    fallback_stats: Optional[dict[str, tuple[float, float]]] = None,
    seed: int = 0,
) -> Prepared:
    """Run cleaning, resampling, imputation, selection and calendar features."""
    rec = clean(as_records(records), config.cleaning_start)
    start = span[0] if config.cleaning_start is None else max(span[0], config.cleaning_start)
    series = resample(rec, meta, config.rate_seconds, (start, span[1]))
    if fallback_stats:
        series = fill_unobserved(series, fallback_stats, seed)
    series = impute(series)
    series, dropped = select_signals(series, config.correlation_cutoff)
    if config.add_time_features and config.time_features:
        series = add_time_features(series, config.time_features)
    return Prepared(series, dropped)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def parse_timestamp(text) -> int:
    if isinstance(text, (int, float)):
        return int(text)
    s = str(text).strip()
    try:
        return int(float(s))
    except ValueError:
        pass
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(s)
    except ValueError as exc:
        raise DataError(f"unparseable timestamp {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def read_metadata(path) -> list[SignalMeta]:
    """Read signal metadata: a JSON list (or ``{"signals": [...]}``) of objects."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    items = doc["signals"] if isinstance(doc, dict) else doc
    out = []
    for i, item in enumerate(items):
        try:
            out.append(
                SignalMeta(
                    id=i,
                    name=str(item["name"]),
                    kind=SignalKind(item.get("kind", "numeric")),
                    increment=item.get("increment"),
                    unit=item.get("unit"),
                )
            )
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}: bad signal entry {item!r}") from exc
    names = [m.name for m in out]
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate signal names")
    return out


def write_metadata(path, meta: Sequence[SignalMeta]) -> None:
    Path(path).write_text(json.dumps([m.to_dict() for m in meta], indent=2) + "\n")


def read_records(path, meta: Sequence[SignalMeta]) -> Records:
    """Read raw records from CSV or JSON lines (chosen by file extension)."""
    path = Path(path)
    index = {m.name: m.id for m in meta}
    ts, sig, val = [], [], []
    unknown = 0

    def add(t, name, v):
        nonlocal unknown
        sid = index.get(str(name))
        if sid is None:
            unknown += 1
            return
        ts.append(parse_timestamp(t))
        sig.append(sid)
        val.append(float(v))

    try:
        with path.open(newline="") as fh:
            if path.suffix in (".jsonl", ".ndjson"):
                for line in fh:
                    if line.strip() and not line.startswith("#"):
                        obj = json.loads(line)
                        add(obj["timestamp"], obj["signal"], obj["value"])
            else:
                reader = csv.DictReader(line for line in fh if not line.startswith("#"))
                missing = {"timestamp", "signal", "value"} - set(reader.fieldnames or ())
                if missing:
                    raise DataError(f"{path}: missing columns {sorted(missing)}")
                for row in reader:
                    add(row["timestamp"], row["signal"], row["value"])
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{path}: malformed record ({exc})") from exc
    if unknown:
        log.warning("%s: skipped %d record(s) for signals not in the metadata", path, unknown)
    return Records(np.array(ts, dtype=np.int64), np.array(sig), np.array(val))


def comment_lines(header: Optional[dict]) -> str:
    """``# key=value`` lines that the readers in this package skip."""
    return "".join(f"# {k}={v}\n" for k, v in (header or {}).items())


def write_records(
    path, records: RecordsLike, meta: Sequence[SignalMeta], header: Optional[dict] = None
) -> None:
    """Write CSV or JSON lines; ``header`` items become leading ``#`` comments."""
    path = Path(path)
    rec = as_records(records)
    names = [m.name for m in meta]
    with path.open("w", newline="") as fh:
        fh.write(comment_lines(header))
        if path.suffix in (".jsonl", ".ndjson"):
            for t, s, v in zip(rec.timestamp.tolist(), rec.signal.tolist(), rec.value.tolist()):
                fh.write(json.dumps({"timestamp": t, "signal": names[s], "value": v}) + "\n")
        else:
            writer = csv.writer(fh)
            writer.writerow(["timestamp", "signal", "value"])
            for t, s, v in zip(rec.timestamp.tolist(), rec.signal.tolist(), rec.value.tolist()):
                writer.writerow([t, names[s], repr(v)])
