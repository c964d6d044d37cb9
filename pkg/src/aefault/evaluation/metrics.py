from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DimensionError, ParameterError


@dataclass(frozen=True)
class ConfusionMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    jaccard: float
    undefined: tuple = ()  # metrics whose denominator was zero (reported as 0.0)

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "ConfusionMetrics":
        undefined = []

        def ratio(num, den, name):
            if den == 0:
                undefined.append(name)
                return 0.0
            return num / den

        precision = ratio(tp, tp + fp, "precision")
        recall = ratio(tp, tp + fn, "recall")
        f1 = ratio(2 * tp, 2 * tp + fp + fn, "f1")
        jaccard = ratio(tp, tp + fp + fn, "jaccard")
        return cls(tp, fp, fn, tn, precision, recall, f1, jaccard, tuple(undefined))

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "jaccard": self.jaccard,
            "undefined": list(self.undefined),
        }


def confusion_counts(pred, truth) -> tuple[int, int, int, int]:
    p = np.asarray(pred, dtype=bool)
    t = np.asarray(truth, dtype=bool)
    if p.shape != t.shape:
        raise DimensionError(f"prediction and truth lengths differ: {p.shape} vs {t.shape}")
    return (
        int(np.sum(p & t)),
        int(np.sum(p & ~t)),
        int(np.sum(~p & t)),
        int(np.sum(~p & ~t)),
    )


def confusion_metrics(pred, truth) -> ConfusionMetrics:
    """Precision, recall, F1 and Jaccard with anomalous as the positive class."""
    return ConfusionMetrics.from_counts(*confusion_counts(pred, truth))


@dataclass(frozen=True)
class RocPoint:
    c: float
    threshold: float
    fpr: float
    tpr: float
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0


def _rates(tp, fp, fn, tn) -> tuple[float, float]:
    fpr = fp / (fp + tn) if fp + tn else 0.0
    tpr = tp / (tp + fn) if tp + fn else 0.0
    return fpr, tpr


def roc_curve(
    re_totals,
    truth,
    c_grid: Sequence[float],
    train_mu: float,
    train_sigma: float,
) -> list[RocPoint]:
    """(FPR, TPR) of the rule ``re > mu + c * sigma`` for each ``c``, ordered by ``c``."""
    re = np.asarray(re_totals, dtype=np.float64)
    t = np.asarray(truth, dtype=bool)
    if re.size == 0 or re.shape != t.shape:
        raise DimensionError("roc_curve needs non-empty, equal-length inputs")
    if train_sigma < 0:
        raise ParameterError("train_sigma must be >= 0")
    out = []
    for c in sorted(float(c) for c in c_grid):
        thr = train_mu + c * train_sigma
        tp, fp, fn, tn = confusion_counts(re > thr, t)
        out.append(RocPoint(c, thr, *_rates(tp, fp, fn, tn), tp, fp, fn, tn))
    return out


def pool_roc(curves: Sequence[Sequence[RocPoint]]) -> list[RocPoint]:
    """Sum confusion counts per ``c`` across folds (each with its own threshold)."""
    if not curves:
        return []
    out = []
    for points in zip(*curves):
        tp = sum(p.tp for p in points)
        fp = sum(p.fp for p in points)
        fn = sum(p.fn for p in points)
        tn = sum(p.tn for p in points)
        out.append(RocPoint(points[0].c, float("nan"), *_rates(tp, fp, fn, tn), tp, fp, fn, tn))
    return out


def write_roc_csv(path, curves: dict, header: Optional[dict] = None) -> None:
    """``curves`` maps a label (fold name, ``pooled``...) to a list of points.

    ``header`` items are written first as ``# key=value`` comment lines.
    """
    with open(path, "w", newline="") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}={v}\n")
        writer = csv.writer(fh)
        writer.writerow(["curve", "c", "threshold", "fpr", "tpr", "tp", "fp", "fn", "tn"])
        for label, points in curves.items():
            for p in points:
                writer.writerow([label, p.c, p.threshold, p.fpr, p.tpr, p.tp, p.fp, p.fn, p.tn])
