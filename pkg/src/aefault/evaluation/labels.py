"""Automatic labels from per-signal thresholds, window rules and smoothing."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import ConfigError, DataError, ParameterError
from ..preprocessing import TIME_FEATURES, window_starts
from ..timeseries import RegularSeries, SignalKind

CALENDAR_RANGES = {"month": (1.0, 12.0), "hour": (0.0, 23.0), "weekday": (0.0, 6.0)}


@dataclass(frozen=True)
class SignalThreshold:
    """Expert bounds (``lower``/``upper``) or a statistical ``confidence`` level.

    ``signal`` is a signal name or id.
    """

    signal: Union[int, str]
    lower: Optional[float] = None
    upper: Optional[float] = None
    confidence: Optional[float] = None

    def __post_init__(self) -> None:
        if self.confidence is not None:
            if self.lower is not None or self.upper is not None:
                raise ConfigError(f"{self.signal}: give either bounds or a confidence, not both")
            if not 0.0 < self.confidence < 1.0:
                raise ConfigError(f"{self.signal}: confidence must lie in (0, 1)")
        elif self.lower is None and self.upper is None:
            raise ConfigError(f"{self.signal}: expert threshold needs at least one bound")

    @property
    def statistical(self) -> bool:
        return self.confidence is not None

    @property
    def z(self) -> float:
        return NormalDist().inv_cdf(1.0 - (1.0 - self.confidence) / 2.0)

    def to_dict(self) -> dict:
        out: dict = {"signal": self.signal}
        for k in ("lower", "upper", "confidence"):
            if getattr(self, k) is not None:
                out[k] = getattr(self, k)
        return out


def statistical(signal, confidence: float = 0.98) -> SignalThreshold:
    return SignalThreshold(signal, confidence=confidence)


def default_thresholds(series: RegularSeries, confidence: float = 0.98) -> list[SignalThreshold]:
    """Thresholds for every signal when no expert file is supplied.

    Numeric sensors get the statistical interval, booleans flag an active
    state, counters are only flagged below zero and calendar features are
    bounded by their natural range.
    """
    out = []
    for s in series.signals:
        if s.name in TIME_FEATURES and s.kind is SignalKind.NUMERIC:
            lo, hi = CALENDAR_RANGES[s.name]
            out.append(SignalThreshold(s.name, lower=lo, upper=hi))
        elif s.kind is SignalKind.BOOLEAN:
            out.append(SignalThreshold(s.name, upper=0.5))
        elif s.kind is SignalKind.COUNTER:
            out.append(SignalThreshold(s.name, lower=0.0))
        else:
            out.append(statistical(s.name, confidence))
    return out


def resolve_bounds(
    series: RegularSeries,
    thresholds: Sequence[SignalThreshold],
    reference: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-signal (lower, upper) arrays; statistical ones use ``reference`` rows."""
    by_key = {}
    for th in thresholds:
        by_key[th.signal] = th
    ref = series.values if reference is None else np.asarray(reference, dtype=np.float64)
    n = series.n_signals
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    for i, s in enumerate(series.signals):
        th = by_key.get(s.name, by_key.get(i))
        if th is None:
            raise ConfigError(f"no label threshold for signal {s.name!r}")
        if th.statistical:
            col = ref[:, i]
            mu, sd = float(col.mean()), float(col.std())
            lower[i], upper[i] = mu - th.z * sd, mu + th.z * sd
        else:
            if th.lower is not None:
                lower[i] = th.lower
            if th.upper is not None:
                upper[i] = th.upper
    return lower, upper


def violations(values: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return (v < lower) | (v > upper)


def label_timestamps(
    series: RegularSeries,
    thresholds: Sequence[SignalThreshold],
    min_violations: int = 10,
    reference: Optional[np.ndarray] = None,
) -> np.ndarray:
    """A timestamp is anomalous when at least ``min_violations`` signals are out of bounds.

    Apply to imputed but not yet normalized values.
    """
    if min_violations < 1:
        raise ParameterError("min_violations must be >= 1")
    lower, upper = resolve_bounds(series, thresholds, reference)
    return violations(series.values, lower, upper).sum(axis=1) >= min_violations


def label_windows(timestamp_labels, w: int, stride: Optional[int] = None) -> np.ndarray:
    """A window is anomalous only if every one of its ``w`` timestamps is."""
    lab = np.asarray(timestamp_labels, dtype=bool)
    starts = window_starts(lab.size, w, w if stride is None else stride)
    if starts.size == 0:
        return np.zeros(0, dtype=bool)
    return lab[starts[:, None] + np.arange(w)[None, :]].all(axis=1)


def smooth_labels(window_labels, radius: int = 2) -> np.ndarray:
    """Centered moving average (kernel shrinks at the edges), kept where >= 0.5."""
    if radius < 0:
        raise ParameterError("radius must be >= 0")
    lab = np.asarray(window_labels, dtype=bool)
    if radius == 0 or lab.size == 0:
        return lab.copy()
    csum = np.concatenate([[0], np.cumsum(lab, dtype=np.int64)])
    idx = np.arange(lab.size)
    lo = np.maximum(idx - radius, 0)
    hi = np.minimum(idx + radius + 1, lab.size)
    # integer form of mean >= 0.5 avoids rounding at the boundary
    return 2 * (csum[hi] - csum[lo]) >= (hi - lo)


def read_thresholds(path) -> list[SignalThreshold]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    items = doc["thresholds"] if isinstance(doc, dict) else doc
    try:
        return [SignalThreshold(**item) for item in items]
    except TypeError as exc:
        raise ConfigError(f"{path}: bad threshold entry ({exc})") from exc


def write_thresholds(path, thresholds: Sequence[SignalThreshold]) -> None:
    Path(path).write_text(json.dumps([t.to_dict() for t in thresholds], indent=2) + "\n")
