"""Reconstruction errors, thresholds and fault localization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, ParameterError, UndefinedContributionError
from .timeseries import FeatureWindow


def _flat(x) -> np.ndarray:
    return x.data if isinstance(x, FeatureWindow) else np.asarray(x, dtype=np.float64)


def re_total(window, reconstruction) -> float:
    """Mean squared error over all ``w*n`` elements of a window."""
    F, Fp = _flat(window), _flat(reconstruction)
    if F.shape != Fp.shape:
        raise DimensionError(f"length mismatch {F.shape} vs {Fp.shape}")
    d = F - Fp
    return float(np.dot(d, d) / d.size)


def re_individual(window, reconstruction, signal: int, w: Optional[int] = None) -> float:
    """Mean squared error of one signal's ``w`` elements (``j = i*w + k``)."""
    F, Fp = _flat(window), _flat(reconstruction)
    if F.shape != Fp.shape:
        raise DimensionError(f"length mismatch {F.shape} vs {Fp.shape}")
    w = w or (window.w if isinstance(window, FeatureWindow) else None)
    if w is None:
        raise ParameterError("window length w is required for a plain vector")
    n = F.size // w
    if not 0 <= signal < n:
        raise ParameterError(f"signal index {signal} outside [0, {n})")
    d = F[signal * w : (signal + 1) * w] - Fp[signal * w : (signal + 1) * w]
    return float(np.dot(d, d) / w)


def re_individual_all(windows: np.ndarray, reconstructions: np.ndarray, w: int) -> np.ndarray:
    """(B, n) matrix of per-signal errors for a batch of flat windows."""
    X = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(reconstructions, dtype=np.float64))
    if X.shape != Y.shape or X.shape[1] % w:
        raise DimensionError(f"cannot split shape {X.shape} into windows of length {w}")
    d = (X - Y).reshape(X.shape[0], -1, w)
    return np.mean(d * d, axis=2)


def re_total_all(windows: np.ndarray, reconstructions: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(reconstructions, dtype=np.float64))
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {Y.shape}")
    d = X - Y
    return np.mean(d * d, axis=1)


@dataclass(frozen=True)
class ThresholdSpec:
    mu: float
    sigma: float
    c: float

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ParameterError("sigma must be >= 0")

    @property
    def value(self) -> float:
        return self.mu + self.c * self.sigma

    def with_c(self, c: float) -> "ThresholdSpec":
        return ThresholdSpec(self.mu, self.sigma, c)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "c": self.c, "value": self.value}


def fit_threshold(train_re: Sequence[float], c: float = 3.0) -> ThresholdSpec:
    """Mean plus ``c`` population standard deviations of training errors."""
    arr = np.asarray(train_re, dtype=np.float64)
    if arr.size == 0:
        raise ParameterError("fit_threshold needs at least one training error")
    return ThresholdSpec(float(arr.mean()), float(arr.std()), float(c))


def contribution_percent(re_ind) -> np.ndarray:
    r = np.asarray(re_ind, dtype=np.float64)
    total = r.sum()
    if not total > 0:
        raise UndefinedContributionError("contributions are undefined for an all-zero error vector")
    return 100.0 * r / total


def top_signals_iterative(re_ind, m: int) -> list[int]:
    """Repeated argmax, removing each winner; ties go to the lower id.

    Winners are knocked out with -inf rather than 0 so a signal whose error
    is exactly zero can never be picked twice.
    """
    r = np.array(re_ind, dtype=np.float64)
    out = []
    for _ in range(m):
        idx = int(np.argmax(r))
        out.append(idx)
        r[idx] = -np.inf
    return out


def top_signals_sorted(re_ind, m: int) -> list[int]:
    r = np.asarray(re_ind, dtype=np.float64)
    return [int(i) for i in np.lexsort((np.arange(r.size), -r))[:m]]


@dataclass(frozen=True)
class SignificantSignal:
    id: int
    re_ind: float
    contribution_pct: float
    name: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "re_ind": self.re_ind,
            "contribution_pct": self.contribution_pct,
        }


@dataclass(frozen=True, eq=False)
class DetectionResult:
    window_index: int
    re_total: float
    is_anomalous: bool
    re_individual: np.ndarray
    significant_signals: tuple = field(default=())
    threshold: Optional[float] = None
    start_timestamp: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "window_index": self.window_index,
            "start_timestamp": self.start_timestamp,
            "re_total": self.re_total,
            "threshold": self.threshold,
            "is_anomalous": self.is_anomalous,
            "signals": [s.to_dict() for s in self.significant_signals],
        }


def localize(
    threshold: ThresholdSpec,
    window,
    reconstruction,
    m: int,
    w: Optional[int] = None,
    window_index: int = 0,
    names: Optional[Sequence[str]] = None,
    start_timestamp: Optional[int] = None,
) -> DetectionResult:
    """Flag a window and, if anomalous, list its ``m`` most significant signals.

    Only an error strictly above the threshold counts as anomalous. The
    ranking is the iterative argmax-and-zero procedure.
    """
    F, Fp = _flat(window), _flat(reconstruction)
    w = w or (window.w if isinstance(window, FeatureWindow) else None)
    if w is None:
        raise ParameterError("window length w is required for a plain vector")
    re_ind = re_individual_all(F, Fp, w)[0]
    total = re_total(F, Fp)
    n = re_ind.size
    if not 1 <= m <= n:
        raise ParameterError(f"m must lie in [1, {n}], got {m}")
    anomalous = total > threshold.value
    significant: tuple = ()
    if anomalous:
        pct = contribution_percent(re_ind) if re_ind.sum() > 0 else np.zeros(n)
        significant = tuple(
            SignificantSignal(i, float(re_ind[i]), float(pct[i]), names[i] if names else None)
            for i in top_signals_iterative(re_ind, m)
        )
    return DetectionResult(
        window_index=window_index,
        re_total=total,
        is_anomalous=bool(anomalous),
        re_individual=re_ind,
        significant_signals=significant,
        threshold=threshold.value,
        start_timestamp=start_timestamp,
    )


def detect_batch(
    threshold: ThresholdSpec,
    windows: np.ndarray,
    reconstructions: np.ndarray,
    w: int,
    m: int,
    names: Optional[Sequence[str]] = None,
    start_timestamps: Optional[Sequence[int]] = None,
) -> list[DetectionResult]:
    m = min(m, np.asarray(windows).shape[1] // w)
    return [
        localize(
            threshold,
            windows[b],
            reconstructions[b],
            m,
            w=w,
            window_index=b,
            names=names,
            start_timestamp=None if start_timestamps is None else int(start_timestamps[b]),
        )
        for b in range(np.asarray(windows).shape[0])
    ]


def write_report(path, results: Sequence[DetectionResult]) -> None:
    with open(path, "w") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_report(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
