"""Chronological cross-validation over ten data segments.

Segments are numbered 1..10 in time order. Round ``r`` (1..4) tests segment
``11 - r``. Scenario 1 trains on the remaining segments among 7..10;
scenario 2 additionally trains on segments 1..6 in every round.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from ..autoencoder import AEConfig, ModelState, reconstruct, train
from ..detection import ThresholdSpec, fit_threshold, re_total_all
from ..errors import ConfigError
from ..preprocessing import NormalizationParams, normalize_values, window_array
from ..timeseries import RegularSeries
from .consistency import consistency_score_model, extract_intervals, span
from .labels import SignalThreshold, default_thresholds, label_timestamps, label_windows, smooth_labels
from .metrics import ConfusionMetrics, RocPoint, confusion_counts, pool_roc, roc_curve

log = logging.getLogger(__name__)

N_SEGMENTS = 10
BASE_SEGMENTS = tuple(range(1, 7))
FOLD_SEGMENTS = tuple(range(7, 11))
DEFAULT_C_GRID = tuple(np.round(np.arange(-1.0, 10.01, 0.25), 2).tolist())


@dataclass(frozen=True)
class Fold:
    round: int
    test: int
    train: tuple


def fold_plan(scenario: int) -> list[Fold]:
    if scenario not in (1, 2):
        raise ConfigError(f"scenario must be 1 or 2, got {scenario!r}")
    folds = []
    for r in range(1, len(FOLD_SEGMENTS) + 1):
        test = N_SEGMENTS + 1 - r
        rest = tuple(s for s in FOLD_SEGMENTS if s != test)
        folds.append(Fold(r, test, (BASE_SEGMENTS + rest) if scenario == 2 else rest))
    return folds


def plan_matrix(scenario: int) -> list[list[Optional[int]]]:
    """Rows are segments 1..10, columns rounds; 0 = train, 1 = test, None = unused."""
    matrix: list[list[Optional[int]]] = [[None] * len(FOLD_SEGMENTS) for _ in range(N_SEGMENTS)]
    for fold in fold_plan(scenario):
        for s in fold.train:
            matrix[s - 1][fold.round - 1] = 0
        matrix[fold.test - 1][fold.round - 1] = 1
    return matrix


def split_segments(series: RegularSeries, k: int = N_SEGMENTS) -> list[RegularSeries]:
    """Cut a series into ``k`` consecutive, near-equal row blocks."""
    if k < 1 or series.n_rows < k:
        raise ConfigError(f"cannot split {series.n_rows} rows into {k} segments")
    edges = np.linspace(0, series.n_rows, k + 1).astype(int)
    return [series.rows(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def fold_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


@dataclass(frozen=True)
class EvalConfig:
    c: float = 3.0
    min_violations: int = 10
    smoothing_radius: int = 2
    gap_merge: int = 60
    confidence: float = 0.98
    c_grid: tuple = DEFAULT_C_GRID
    master_seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["c_grid"] = list(self.c_grid)
        return d


def auto_labels(
    segment: RegularSeries,
    thresholds: Sequence[SignalThreshold],
    reference: np.ndarray,
    w: int,
    stride: int,
    config: EvalConfig,
) -> np.ndarray:
    ts = label_timestamps(segment, thresholds, config.min_violations, reference)
    return smooth_labels(label_windows(ts, w, stride), config.smoothing_radius)


def _kappa(labels, gap_merge: int):
    groups = extract_intervals(labels, gap_merge)
    if sum(span(g) for g in groups) <= 0:
        return None, groups
    return consistency_score_model(groups), groups


@dataclass
class SplitResult:
    """Everything one train/test split produces; arrays are kept for reuse."""

    model: ModelState
    normalization: NormalizationParams
    threshold: ThresholdSpec
    test_windows: np.ndarray
    reconstructions: np.ndarray
    re: np.ndarray
    predicted: np.ndarray
    truth: np.ndarray
    auto_labels: np.ndarray
    metrics: ConfusionMetrics
    roc: list
    kappa_model: Optional[float]
    kappa_labels: Optional[float]
    model_groups: list = field(default_factory=list)
    label_groups: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "threshold": self.threshold.to_dict(),
            "n_test_windows": int(self.re.size),
            "metrics": self.metrics.to_dict(),
            "consistency_model": self.kappa_model,
            "consistency_labels": self.kappa_labels,
            "best_epoch": self.model.epoch,
        }


def evaluate_split(
    train_segments: Sequence[RegularSeries],
    test_segment: RegularSeries,
    ae_config: AEConfig,
    config: EvalConfig,
    window: int,
    stride: int,
    seed: int,
    thresholds: Optional[Sequence[SignalThreshold]] = None,
    truth: Optional[np.ndarray] = None,
    trainer: Callable = train,
) -> SplitResult:
    """Train on ``train_segments`` and score ``test_segment``.

    Normalization, the detection threshold and statistical label bounds are
    fitted on training rows only. Windows never straddle a segment boundary.
    ``truth`` overrides the automatic labels as the reference for metrics and
    ROC, e.g. with simulator ground truth. The label consistency score always
    describes the automatic labels.
    """
    train_values = np.vstack([s.values for s in train_segments])
    norm = NormalizationParams(train_values.min(axis=0), train_values.max(axis=0))
    X_train = np.vstack(
        [window_array(normalize_values(s.values, norm), window, stride) for s in train_segments]
    )
    X_test = window_array(normalize_values(test_segment.values, norm), window, stride)
    cfg = replace(ae_config, n_signals=test_segment.n_signals, window=window, rng_seed=seed)
    model, _ = trainer(cfg, X_train)
    thr = fit_threshold(re_total_all(X_train, reconstruct(model, X_train)), config.c)
    recon = reconstruct(model, X_test)
    re = re_total_all(X_test, recon)
    predicted = re > thr.value

    thresholds = thresholds or default_thresholds(test_segment, config.confidence)
    labels = auto_labels(test_segment, thresholds, train_values, window, stride, config)
    reference = labels if truth is None else np.asarray(truth, dtype=bool)
    k_model, g_model = _kappa(predicted, config.gap_merge)
    k_labels, g_labels = _kappa(labels, config.gap_merge)
    return SplitResult(
        model=model,
        normalization=norm,
        threshold=thr,
        test_windows=X_test,
        reconstructions=recon,
        re=re,
        predicted=predicted,
        truth=reference,
        auto_labels=labels,
        metrics=ConfusionMetrics.from_counts(*confusion_counts(predicted, reference)),
        roc=roc_curve(re, reference, config.c_grid, thr.mu, thr.sigma),
        kappa_model=k_model,
        kappa_labels=k_labels,
        model_groups=g_model,
        label_groups=g_labels,
    )


@dataclass
class CVReport:
    scenario: int
    folds: list  # (Fold, SplitResult)
    config: EvalConfig

    def pooled_metrics(self) -> ConfusionMetrics:
        tp = fp = fn = tn = 0
        for _, res in self.folds:
            tp, fp, fn, tn = tp + res.metrics.tp, fp + res.metrics.fp, fn + res.metrics.fn, tn + res.metrics.tn
        return ConfusionMetrics.from_counts(tp, fp, fn, tn)

    def _pooled_kappa(self, attr: str):
        groups = [g for _, res in self.folds for g in getattr(res, attr)]
        if sum(span(g) for g in groups) <= 0:
            return None
        return consistency_score_model(groups)

    @staticmethod
    def _mean(values):
        values = [v for v in values if v is not None]
        return float(np.mean(values)) if values else None

    def pooled_roc(self) -> list[RocPoint]:
        return pool_roc([res.roc for _, res in self.folds])

    def roc_curves(self) -> dict:
        curves = {f"round{fold.round}": res.roc for fold, res in self.folds}
        curves["pooled"] = self.pooled_roc()
        return curves

    def to_dict(self) -> dict:
        folds = []
        for fold, res in self.folds:
            entry = {"round": fold.round, "test_segment": fold.test, "train_segments": list(fold.train)}
            entry.update(res.summary())
            folds.append(entry)
        return {
            "scenario": self.scenario,
            "config": self.config.to_dict(),
            "folds": folds,
            "aggregate": {
                "metrics": self.pooled_metrics().to_dict(),
                "consistency_model": {
                    "pooled": self._pooled_kappa("model_groups"),
                    "fold_mean": self._mean(r.kappa_model for _, r in self.folds),
                },
                "consistency_labels": {
                    "pooled": self._pooled_kappa("label_groups"),
                    "fold_mean": self._mean(r.kappa_labels for _, r in self.folds),
                },
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_cv(
    scenario: int,
    segments: Sequence[RegularSeries],
    ae_config: AEConfig,
    config: EvalConfig = EvalConfig(),
    window: int = 10,
    stride: Optional[int] = None,
    thresholds: Optional[Sequence[SignalThreshold]] = None,
    trainer: Callable = train,
    truths: Optional[Sequence[np.ndarray]] = None,
) -> CVReport:
    """Run every round of ``scenario``.

    ``truths`` optionally gives per-segment reference window labels that
    replace the automatic labels (same order as ``segments``).
    """
    if len(segments) != N_SEGMENTS:
        raise ConfigError(f"cross-validation needs {N_SEGMENTS} segments, got {len(segments)}")
    if truths is not None and len(truths) != N_SEGMENTS:
        raise ConfigError(f"expected {N_SEGMENTS} reference label arrays, got {len(truths)}")
    stride = window if stride is None else stride
    folds = []
    for i, fold in enumerate(fold_plan(scenario)):
        log.info("scenario %d round %d: test segment %d", scenario, fold.round, fold.test)
        res = evaluate_split(
            [segments[s - 1] for s in fold.train],
            segments[fold.test - 1],
            ae_config,
            config,
            window,
            stride,
            fold_seed(config.master_seed, i),
            thresholds=thresholds,
            truth=None if truths is None else truths[fold.test - 1],
            trainer=trainer,
        )
        folds.append((fold, res))
    return CVReport(scenario, folds, config)
