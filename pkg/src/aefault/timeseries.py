"""Core data model for irregular and regular multivariate sensor series.

Timestamps are integer seconds since the Unix epoch, interpreted as UTC.
All indices are 0-based. A feature window is stored flat in signal-major
order: element ``j = i * w + k`` holds signal ``i`` at window offset ``k``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionError


class SignalKind(str, enum.Enum):
    NUMERIC = "numeric"
    BOOLEAN = "boolean"
    COUNTER = "counter"


@dataclass(frozen=True)
class SignalMeta:
    """Static description of one signal.

    ``increment`` is only meaningful for counters and must be positive there.
    """

    id: int
    name: str
    kind: SignalKind = SignalKind.NUMERIC
    increment: Optional[int] = None
    unit: Optional[str] = None

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ConfigError(f"signal id must be >= 0, got {self.id}")
        kind = SignalKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is SignalKind.COUNTER:
            inc = 1 if self.increment is None else int(self.increment)
            if inc <= 0:
                raise ConfigError(f"counter {self.name!r} needs a positive increment")
            object.__setattr__(self, "increment", inc)

    def to_dict(self) -> dict:
        out = {"name": self.name, "kind": self.kind.value}
        if self.increment is not None:
            out["increment"] = self.increment
        if self.unit is not None:
            out["unit"] = self.unit
        return out


def check_dense_ids(signals: Sequence[SignalMeta]) -> None:
    ids = [s.id for s in signals]
    if sorted(ids) != list(range(len(ids))):
        raise ConfigError(f"signal ids must be dense and unique 0..n-1, got {ids}")


@dataclass(frozen=True)
class RawRecord:
    timestamp: int
    signal: int
    value: float


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RegularSeries:
    """Equal-frequency T x n matrix with a per-cell imputation mask.

    Row ``t`` belongs to instant ``start + t * rate_seconds``. ``mask`` is
    True where the value was filled in rather than observed. Before
    imputation missing cells hold NaN.
    """

    start: int
    rate_seconds: int
    values: np.ndarray
    mask: np.ndarray
    signals: tuple = field(default=())

    def __post_init__(self) -> None:
        if self.rate_seconds < 1:
            raise ConfigError("rate_seconds must be >= 1")
        values = _frozen(self.values, np.float64)
        if values.ndim != 2:
            raise DimensionError(f"values must be 2-D, got shape {values.shape}")
        mask = _frozen(self.mask, bool)
        if mask.shape != values.shape:
            raise DimensionError("mask shape differs from values shape")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        signals = tuple(self.signals)
        if not signals:
            signals = tuple(SignalMeta(i, f"signal_{i}") for i in range(values.shape[1]))
        if len(signals) != values.shape[1]:
            raise DimensionError(
                f"{len(signals)} signal descriptions for {values.shape[1]} columns"
            )
        check_dense_ids(signals)
        object.__setattr__(self, "signals", signals)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_signals(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.signals]

    def timestamps(self) -> np.ndarray:
        return self.start + self.rate_seconds * np.arange(self.n_rows, dtype=np.int64)

    def has_gaps(self) -> bool:
        return bool(np.isnan(self.values).any())

    def rows(self, lo: int, hi: int) -> "RegularSeries":
        lo = max(lo, 0)
        return replace(
            self,
            start=self.start + lo * self.rate_seconds,
            values=self.values[lo:hi],
            mask=self.mask[lo:hi],
        )

    def columns(self, keep: Sequence[int]) -> "RegularSeries":
        """Subset of columns, with signal ids renumbered densely."""
        keep = list(keep)
        signals = tuple(replace(self.signals[c], id=new) for new, c in enumerate(keep))
        return replace(
            self, values=self.values[:, keep], mask=self.mask[:, keep], signals=signals
        )

    def equals(self, other: "RegularSeries") -> bool:
        return (
            self.start == other.start
            and self.rate_seconds == other.rate_seconds
            and self.signals == other.signals
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def rows_for_span(span_seconds: int, rate_seconds: int) -> int:
    """Number of complete intervals of ``rate_seconds`` inside a span."""
    if rate_seconds < 1:
        raise ConfigError("rate_seconds must be >= 1")
    return max(int(span_seconds) // int(rate_seconds), 0)


@dataclass(frozen=True, eq=False)
class FeatureWindow:
    start_index: int
    w: int
    data: np.ndarray

    def __post_init__(self) -> None:
        data = _frozen(self.data, np.float64)
        if data.ndim != 1 or self.w < 1 or data.size % self.w:
            raise DimensionError(
                f"window data of length {data.size} is not a multiple of w={self.w}"
            )
        object.__setattr__(self, "data", data)

    @property
    def n_signals(self) -> int:
        return self.data.size // self.w

    def matrix(self) -> np.ndarray:
        return unflatten(self, self.w, self.n_signals)


def flatten(window_matrix, start_index: int = 0) -> FeatureWindow:
    """Flatten a w x n matrix (rows = time) into signal-major order."""
    m = np.asarray(window_matrix, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a w x n matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise DimensionError("window matrix contains non-finite values")
    return FeatureWindow(start_index=start_index, w=m.shape[0], data=m.T.reshape(-1))


def unflatten(fw, w: int, n: int) -> np.ndarray:
    data = fw.data if isinstance(fw, FeatureWindow) else np.asarray(fw, dtype=np.float64)
    if data.size != w * n:
        raise DimensionError(f"vector of length {data.size} cannot be {w} x {n}")
    return data.reshape(n, w).T.copy()


def stack_windows(windows: Sequence[FeatureWindow]) -> np.ndarray:
    """Stack flat windows into a (B, w*n) array."""
    if not windows:
        return np.zeros((0, 0))
    return np.stack([fw.data for fw in windows])
