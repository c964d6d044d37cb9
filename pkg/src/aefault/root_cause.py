"""Join localized signals to components through an expert look-up table."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .detection import DetectionResult
from .errors import DataError, DuplicateEntryError, EmptyReportError

UNMAPPED = "unmapped"
REQUIRED_COLUMNS = ("sensor", "component", "failure_type")


@dataclass(frozen=True)
class LookupRow:
    sensor: str
    component: str
    failure_type: str
    note: Optional[str] = None
    extras: tuple = ()


@dataclass(frozen=True)
class LookupTable:
    rows: tuple

    def __post_init__(self) -> None:
        seen = set()
        for row in self.rows:
            if row.sensor in seen:
                raise DuplicateEntryError(f"sensor {row.sensor!r} appears more than once")
            seen.add(row.sensor)
        object.__setattr__(self, "_index", {r.sensor: r for r in self.rows})

    def __len__(self) -> int:
        return len(self.rows)

    def get(self, sensor: str) -> Optional[LookupRow]:
        return self._index.get(sensor)


def load_lookup(path) -> LookupTable:
    """Read ``sensor,component,failure_type[,note,...]`` CSV.

    Columns beyond the required three are kept: ``note`` verbatim, anything
    else as (column, value) pairs in ``extras``.
    """
    path = Path(path)
    text = path.read_text()
    if not any(line.strip() and not line.startswith("#") for line in text.splitlines()):
        raise DataError(f"{path}: look-up table is empty")
    reader = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    rows = []
    for rowno, raw in enumerate(reader, start=1):
        rec = {(k or "").strip(): v for k, v in raw.items()}
        if None in raw or any(rec.get(c) in (None, "") for c in REQUIRED_COLUMNS):
            raise DataError(f"{path}: data row {rowno} is malformed")
        extras = tuple(
            (k, v) for k, v in rec.items() if k not in REQUIRED_COLUMNS and k != "note"
        )
        rows.append(
            LookupRow(
                sensor=rec["sensor"].strip(),
                component=rec["component"].strip(),
                failure_type=rec["failure_type"].strip(),
                note=rec.get("note"),
                extras=extras,
            )
        )
    if not rows:
        raise DataError(f"{path}: look-up table has a header but no rows")
    return LookupTable(tuple(rows))


def write_lookup(path, table: LookupTable, header: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}={v}\n")
        writer = csv.writer(fh)
        writer.writerow(["sensor", "component", "failure_type", "note"])
        for r in table.rows:
            writer.writerow([r.sensor, r.component, r.failure_type, r.note or ""])


@dataclass(frozen=True)
class RootCauseEntry:
    contribution_pct: float
    sensor: str
    component: str
    failure_type: str

    @property
    def mapped(self) -> bool:
        return self.component != UNMAPPED


@dataclass(frozen=True)
class RootCauseReport:
    window_index: int
    entries: tuple
    dominant_component: str
    component_totals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "window_index": self.window_index,
            "entries": [
                {
                    "contribution_pct": e.contribution_pct,
                    "sensor": e.sensor,
                    "component": e.component,
                    "failure_type": e.failure_type,
                }
                for e in self.entries
            ],
            "dominant_component": self.dominant_component,
            "component_totals": self.component_totals,
        }


def _component_key(name: str):
    # "Component 3" sorts before "Component 12"; unmapped sorts last
    tail = name.rsplit(" ", 1)[-1]
    return (name == UNMAPPED, int(tail) if tail.isdigit() else float("inf"), name)


def analyze(result: DetectionResult, table: LookupTable) -> RootCauseReport:
    """Map significant signals to components; the dominant one has the largest summed share."""
    if not result.is_anomalous or not result.significant_signals:
        raise EmptyReportError(f"window {result.window_index} is not anomalous")
    entries = []
    for s in result.significant_signals:
        name = s.name if s.name is not None else str(s.id)
        row = table.get(name)
        entries.append(
            RootCauseEntry(
                contribution_pct=s.contribution_pct,
                sensor=name,
                component=row.component if row else UNMAPPED,
                failure_type=row.failure_type if row else UNMAPPED,
            )
        )
    entries.sort(key=lambda e: -e.contribution_pct)
    totals: dict[str, float] = {}
    for e in entries:
        totals[e.component] = totals.get(e.component, 0.0) + e.contribution_pct
    top = max(totals.values())
    dominant = min((k for k, v in totals.items() if v == top), key=_component_key)
    return RootCauseReport(result.window_index, tuple(entries), dominant, totals)


def write_reports(path, reports) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n")
