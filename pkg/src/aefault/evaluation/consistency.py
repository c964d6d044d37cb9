"""Consistency score: how contiguously an anomaly is flagged over time."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DegenerateAnomalyError, ParameterError, UndefinedScoreError


@dataclass(frozen=True)
class AnomalyInterval:
    """Closed interval ``[start, end]`` in window units."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise ParameterError(f"interval end {self.end} precedes start {self.start}")

    @property
    def length(self) -> int:
        return self.end - self.start


def runs(labels) -> list[AnomalyInterval]:
    """Maximal runs of True as closed intervals."""
    lab = np.asarray(labels, dtype=bool).astype(np.int8)
    edges = np.diff(np.concatenate([[0], lab, [0]]))
    starts = np.nonzero(edges == 1)[0]
    ends = np.nonzero(edges == -1)[0] - 1
    return [AnomalyInterval(int(s), int(e)) for s, e in zip(starts, ends)]


def extract_intervals(labels, gap_merge: int = 60) -> list[list[AnomalyInterval]]:
    """Group runs into anomalies; runs at most ``gap_merge`` healthy windows apart merge."""
    if gap_merge < 0:
        raise ParameterError("gap_merge must be >= 0")
    groups: list[list[AnomalyInterval]] = []
    for iv in runs(labels):
        if groups and iv.start - groups[-1][-1].end - 1 <= gap_merge:
            groups[-1].append(iv)
        else:
            groups.append([iv])
    return groups


def span(anomaly: Sequence[AnomalyInterval]) -> int:
    return anomaly[-1].end - anomaly[0].start


def consistency_score_anomaly(anomaly: Sequence[AnomalyInterval]) -> float:
    """Covered length over the anomaly's full extent, ``sum(e_j - s_j) / (e_N - s_1)``."""
    if not anomaly:
        raise ParameterError("an anomaly needs at least one interval")
    total_span = span(anomaly)
    if total_span <= 0:
        raise DegenerateAnomalyError("anomaly spans zero windows")
    return sum(iv.length for iv in anomaly) / total_span


def consistency_score_model(anomalies: Sequence[Sequence[AnomalyInterval]]) -> float:
    """Span-weighted mean of per-anomaly scores.

    Zero-span anomalies carry zero weight and are skipped.
    """
    if not anomalies:
        raise UndefinedScoreError("no anomalies to score")
    weights = [span(a) for a in anomalies]
    total = sum(weights)
    if total <= 0:
        raise UndefinedScoreError("every anomaly has zero span")
    return sum(wt * consistency_score_anomaly(a) for wt, a in zip(weights, anomalies) if wt > 0) / total


def consistency_of_labels(labels, gap_merge: int = 60):
    """Model-level score of a boolean sequence, or None when undefined."""
    try:
        return consistency_score_model(extract_intervals(labels, gap_merge))
    except UndefinedScoreError:
        return None
