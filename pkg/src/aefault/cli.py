"""Command-line workflow: simulate, preprocess, train, detect, localize, evaluate, roc.

All commands share one JSON config file with a section per command. Flags
override file values. Every artifact records the schema version and a hash
of the configuration sections that produced it, so downstream commands can
refuse stale inputs.

Environment:
    AEFAULT_LOG_LEVEL     logging level name (default WARNING)
    AEFAULT_FIXED_CLOCK   ISO time or epoch seconds to stamp into manifests
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .autoencoder import AEConfig, load, load_meta, reconstruct, save, train
from .detection import ThresholdSpec, detect_batch, re_total_all
from .errors import (
    AefaultError,
    ConfigError,
    DataError,
    PrerequisiteError,
    StaleArtifactError,
)
from .evaluation import (
    EvalConfig,
    auto_labels,
    default_thresholds,
    label_windows,
    read_thresholds,
    roc_curve,
    run_cv,
    split_segments,
    write_roc_csv,
)
from .evaluation.cv import DEFAULT_C_GRID
from .preprocessing import (
    PreprocessConfig,
    comment_lines,
    fit_normalization,
    normalize_values,
    parse_timestamp,
    prepare_series,
    read_metadata,
    read_records,
    window_array,
    window_starts,
    write_metadata,
    write_records,
)
from .root_cause import LookupRow, LookupTable, analyze, load_lookup, write_lookup
from .simulator import (
    DAY,
    HOUR,
    FaultInjection,
    GroundTruth,
    PlantSpec,
    load_scenario,
    lookup_rows,
    mini_plant,
    simulate,
)
from .timeseries import RegularSeries, SignalKind, SignalMeta

log = logging.getLogger("aefault")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_PREREQUISITE, EXIT_DATA = 0, 2, 3, 4

DEFAULT_FAULT = {
    "sensors": ["Sensor 3"],
    "kind": "step",
    "start": 12 * DAY + 6 * HOUR,
    "duration": 4 * HOUR,
    "magnitude": 15.0,
}

DEFAULTS: dict = {
    "seed": 0,
    "paths": {"out": "run", "data": None, "metadata": None, "thresholds": None, "lookup": None},
    "simulate": {"scenario": None, "days": 14, "faults": [DEFAULT_FAULT]},
    "preprocess": {
        "rate_seconds": 60,
        "window": 10,
        "stride": None,
        "correlation_cutoff": 0.95,
        "cleaning_start": None,
        "time_features": ["month", "hour", "weekday"],
        "train_fraction": 0.7,
    },
    "train": {},
    "detect": {"c": 3.0, "m": 10},
    "evaluate": {
        "scenario": 1,
        "min_violations": 10,
        "smoothing_radius": 2,
        "gap_merge": 60,
        "confidence": 0.98,
        "c_grid": None,
        "truth": "labels",
    },
}

# config sections each stage depends on, cumulatively
STAGE_SECTIONS = {
    "simulate": ("seed", "simulate"),
    "preprocess": ("seed", "preprocess"),
    "train": ("seed", "preprocess", "train"),
    "detect": ("seed", "preprocess", "train", "detect"),
    "localize": ("seed", "preprocess", "train", "detect"),
    "evaluate": ("seed", "preprocess", "train", "detect", "evaluate"),
    "roc": ("seed", "preprocess", "train", "detect", "evaluate"),
}

PREREQUISITE = {
    "series.npz": "preprocess",
    "windows.npz": "preprocess",
    "normalization.json": "preprocess",
    "model.aefm": "train",
    "train.json": "train",
    "detections.jsonl": "detect",
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_assignment(text: str) -> tuple[list[str], object]:
    """``section.key=value``; the value is parsed as JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"--set expects section.key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def load_config(path: Optional[str], assignments: Sequence[str] = (), flags: Optional[dict] = None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        cfg = merge(cfg, doc)
    for text in assignments:
        keys, value = parse_assignment(text)
        node = cfg
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                raise ConfigError(f"--set: {'.'.join(keys)} does not name a config entry")
            node = node[k]
        node[keys[-1]] = value
    for dotted, value in (flags or {}).items():
        if value is None:
            continue
        section, key = dotted.split(".") if "." in dotted else (None, dotted)
        if section is None:
            cfg[key] = value
        else:
            cfg[section][key] = value
    return cfg


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict, stage: str) -> str:
    relevant = {k: cfg[k] for k in STAGE_SECTIONS[stage]}
    return hashlib.sha256(canonical(relevant).encode()).hexdigest()


def preprocess_config(cfg: dict) -> PreprocessConfig:
    sec = dict(cfg["preprocess"])
    sec.pop("train_fraction", None)
    try:
        return PreprocessConfig(**{**sec, "time_features": tuple(sec.get("time_features") or ())})
    except TypeError as exc:
        raise ConfigError(f"preprocess: {exc}") from exc


def ae_config(cfg: dict, n_signals: int, window: int) -> AEConfig:
    sec = dict(cfg["train"])
    sec.setdefault("rng_seed", int(cfg["seed"]))
    return AEConfig.from_dict({**sec, "n_signals": n_signals, "window": window})


def eval_config(cfg: dict) -> EvalConfig:
    sec = cfg["evaluate"]
    if sec.get("truth", "labels") not in ("labels", "ground"):
        raise ConfigError(f"evaluate.truth must be 'labels' or 'ground', got {sec['truth']!r}")
    grid = sec.get("c_grid")
    return EvalConfig(
        c=float(cfg["detect"]["c"]),
        min_violations=int(sec["min_violations"]),
        smoothing_radius=int(sec["smoothing_radius"]),
        gap_merge=int(sec["gap_merge"]),
        confidence=float(sec["confidence"]),
        c_grid=tuple(float(c) for c in grid) if grid else DEFAULT_C_GRID,
        master_seed=int(cfg["seed"]),
    )


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def now_stamp() -> str:
    fixed = os.environ.get("AEFAULT_FIXED_CLOCK")
    if fixed:
        return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(parse_timestamp(fixed)))
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


class Workspace:
    """The output directory plus bookkeeping for one command invocation."""

    def __init__(self, cfg: dict, stage: str):
        self.cfg = cfg
        self.stage = stage
        self.out = Path(cfg["paths"]["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.hash = config_hash(cfg, stage)

    def path(self, name: str) -> Path:
        return self.out / name

    def stamp(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "config_hash": self.hash}

    def require(self, name: str) -> Path:
        p = self.path(name)
        if not p.exists():
            cmd = PREREQUISITE.get(name, "the upstream command")
            raise PrerequisiteError(f"{p} is missing; run `aefault {cmd}` first")
        return p

    def check_fresh(self, name: str, found: Optional[str]) -> None:
        producer = PREREQUISITE[name]
        expected = config_hash(self.cfg, producer)
        if found != expected:
            raise StaleArtifactError(
                f"{self.path(name)} was produced with a different configuration; "
                f"rerun `aefault {producer}`"
            )

    def write_json(self, name: str, payload: dict, manifest: bool = False) -> Path:
        body = {**self.stamp(), **payload}
        if manifest:
            body["created_at"] = now_stamp()
            body["version"] = __version__
        p = self.path(name)
        p.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        return p

    def read_json(self, name: str, check: bool = True) -> dict:
        doc = json.loads(self.require(name).read_text())
        if check:
            self.check_fresh(name, doc.get("config_hash"))
        return doc


def save_series(path: Path, series: RegularSeries, stamp: dict) -> None:
    np.savez(
        path,
        values=series.values,
        mask=series.mask,
        start=np.int64(series.start),
        rate_seconds=np.int64(series.rate_seconds),
        signals=np.array(canonical([s.to_dict() for s in series.signals])),
        stamp=np.array(canonical(stamp)),
    )


def load_npz(ws: Workspace, name: str):
    with np.load(ws.require(name)) as z:
        data = {k: z[k] for k in z.files}
    stamp = json.loads(str(data.pop("stamp")))
    ws.check_fresh(name, stamp.get("config_hash"))
    return data


def series_from_npz(data: dict) -> RegularSeries:
    signals = tuple(
        SignalMeta(
            i,
            s["name"],
            SignalKind(s.get("kind", "numeric")),
            s.get("increment"),
            s.get("unit"),
        )
        for i, s in enumerate(json.loads(str(data["signals"])))
    )
    return RegularSeries(
        int(data["start"]), int(data["rate_seconds"]), data["values"], data["mask"], signals
    )


def read_jsonl(path: Path) -> list[dict]:
    with path.open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_jsonl(path: Path, rows: Sequence[dict], stamp: dict) -> None:
    with path.open("w") as fh:
        for row in rows:
            fh.write(json.dumps({**row, **stamp}, sort_keys=True) + "\n")


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _plant(cfg: dict) -> tuple[PlantSpec, list[FaultInjection]]:
    sec = cfg["simulate"]
    if sec.get("scenario"):
        return load_scenario(sec["scenario"])
    try:
        faults = [FaultInjection(**f) for f in sec.get("faults") or []]
    except TypeError as exc:
        raise ConfigError(f"simulate.faults: {exc}") from exc
    return mini_plant(days=int(sec["days"])), faults


def cmd_simulate(cfg: dict) -> dict:
    ws = Workspace(cfg, "simulate")
    spec, faults = _plant(cfg)
    sim = simulate(spec, faults, int(cfg["seed"]))
    header = ws.stamp()
    write_records(ws.path("records.csv"), sim.records, sim.meta, header=header)
    write_metadata(ws.path("metadata.json"), sim.meta)
    table = LookupTable(tuple(LookupRow(*row) for row in lookup_rows(spec)))
    write_lookup(ws.path("lookup.csv"), table, header=header)
    ws.write_json(
        "ground_truth.json",
        {"start": spec.start, "end": spec.end, **sim.truth.to_dict()},
    )
    ws.write_json(
        "simulate.json",
        {"plant": spec.to_dict(), "faults": [f.__dict__ for f in faults], "n_records": len(sim.records)},
        manifest=True,
    )
    return {"records": len(sim.records), "signals": len(sim.meta), "out": str(ws.out)}


def _inputs(cfg: dict, ws: Workspace) -> tuple[Path, Path]:
    paths = cfg["paths"]
    data = Path(paths["data"]) if paths.get("data") else ws.path("records.csv")
    meta = Path(paths["metadata"]) if paths.get("metadata") else ws.path("metadata.json")
    for p in (data, meta):
        if not p.exists():
            raise PrerequisiteError(f"{p} is missing; run `aefault simulate` or set paths.data/paths.metadata")
    return data, meta


def _span(records, pp: PreprocessConfig, out: Path) -> tuple[int, int]:
    truth = out / "ground_truth.json"
    if truth.exists():
        doc = json.loads(truth.read_text())
        return int(doc["start"]), int(doc["end"])
    if len(records) == 0:
        raise DataError("no records to preprocess")
    lo = int(records.timestamp.min())
    lo -= lo % pp.rate_seconds
    return lo, int(records.timestamp.max()) + 1


def train_cut(n_rows: int, fraction: float, w: int) -> int:
    """First test row: the training share rounded down to whole windows."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError("preprocess.train_fraction must lie in (0, 1)")
    return int(n_rows * fraction) // w * w


def cmd_preprocess(cfg: dict) -> dict:
    ws = Workspace(cfg, "preprocess")
    pp = preprocess_config(cfg)
    data_path, meta_path = _inputs(cfg, ws)
    meta = read_metadata(meta_path)
    records = read_records(data_path, meta)
    prepared = prepare_series(records, meta, pp, _span(records, pp, ws.out), seed=int(cfg["seed"]))
    series = prepared.series
    cut = train_cut(series.n_rows, float(cfg["preprocess"]["train_fraction"]), pp.window)
    norm = fit_normalization(series.rows(0, cut))
    scaled = normalize_values(series.values, norm)
    stamp = ws.stamp()
    save_series(ws.path("series.npz"), series, stamp)
    np.savez(
        ws.path("windows.npz"),
        train=window_array(scaled[:cut], pp.window, pp.stride),
        test=window_array(scaled[cut:], pp.window, pp.stride),
        train_starts=window_starts(cut, pp.window, pp.stride),
        test_starts=cut + window_starts(series.n_rows - cut, pp.window, pp.stride),
        stamp=np.array(canonical(stamp)),
    )
    ws.write_json("normalization.json", norm.to_dict())
    ws.write_json(
        "preprocess.json",
        {
            "signals": series.names,
            "dropped": [
                {"signal": d.signal.name, "correlated_with": d.correlated_with.name, "rho": d.rho}
                for d in prepared.dropped
            ],
            "n_rows": series.n_rows,
            "train_rows": cut,
            "inputs": {"data": sha256_file(data_path), "metadata": sha256_file(meta_path)},
        },
        manifest=True,
    )
    return {"rows": series.n_rows, "signals": series.n_signals, "dropped": len(prepared.dropped)}


def cmd_train(cfg: dict) -> dict:
    ws = Workspace(cfg, "train")
    pp = preprocess_config(cfg)
    win = load_npz(ws, "windows.npz")
    X = win["train"]
    if X.shape[0] == 0:
        raise DataError("no training windows; lower the window or raise train_fraction")
    n = X.shape[1] // pp.window
    model, history = train(ae_config(cfg, n, pp.window), X)
    re = re_total_all(X, reconstruct(model, X))
    save(model, ws.path("model.aefm"), meta=ws.stamp())
    with ws.path("history.csv").open("w", newline="") as fh:
        fh.write(comment_lines(ws.stamp()))
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for row in history.to_rows():
            writer.writerow([row[0], repr(row[1]), repr(row[2])])
    ws.write_json(
        "train.json",
        {
            "re_mu": float(re.mean()),
            "re_sigma": float(re.std()),
            "best_epoch": history.best_epoch,
            "stopped_epoch": history.stopped_epoch,
            "n_params": model.n_params,
            "n_windows": int(X.shape[0]),
        },
        manifest=True,
    )
    return {"best_epoch": history.best_epoch, "re_mu": float(re.mean()), "re_sigma": float(re.std())}


def _model(ws: Workspace):
    path = ws.require("model.aefm")
    ws.check_fresh("model.aefm", load_meta(path).get("config_hash"))
    return load(path)


def _detect(cfg: dict, ws: Workspace, m: int):
    pp = preprocess_config(cfg)
    model = _model(ws)
    stats = ws.read_json("train.json")
    win = load_npz(ws, "windows.npz")
    series = series_from_npz(load_npz(ws, "series.npz"))
    thr = ThresholdSpec(stats["re_mu"], stats["re_sigma"], float(cfg["detect"]["c"]))
    X = win["test"]
    recon = reconstruct(model, X)
    starts = series.start + series.rate_seconds * win["test_starts"]
    results = detect_batch(thr, X, recon, pp.window, m, series.names, starts)
    return results, win["test_starts"]


def cmd_detect(cfg: dict) -> dict:
    ws = Workspace(cfg, "detect")
    results, _ = _detect(cfg, ws, m=1)
    rows = []
    for r in results:
        row = r.to_dict()
        row["signals"] = []
        rows.append(row)
    write_jsonl(ws.path("detections.jsonl"), rows, ws.stamp())
    flagged = sum(r.is_anomalous for r in results)
    return {"windows": len(results), "anomalous": flagged}


def _lookup(cfg: dict, ws: Workspace) -> LookupTable:
    p = cfg["paths"].get("lookup")
    path = Path(p) if p else ws.path("lookup.csv")
    if not path.exists():
        raise PrerequisiteError(f"{path} is missing; set paths.lookup or run `aefault simulate`")
    return load_lookup(path)


def cmd_localize(cfg: dict) -> dict:
    ws = Workspace(cfg, "localize")
    table = _lookup(cfg, ws)
    results, _ = _detect(cfg, ws, m=int(cfg["detect"]["m"]))
    write_jsonl(ws.path("localized.jsonl"), [r.to_dict() for r in results], ws.stamp())
    reports = [analyze(r, table).to_dict() for r in results if r.is_anomalous]
    ws.write_json("rootcause.json", {"reports": reports})
    return {"windows": len(results), "reports": len(reports)}


def _thresholds(cfg: dict, series: RegularSeries, confidence: float):
    p = cfg["paths"].get("thresholds")
    return read_thresholds(p) if p else default_thresholds(series, confidence)


def _ground_truth(ws: Workspace) -> GroundTruth:
    path = ws.path("ground_truth.json")
    if not path.exists():
        raise PrerequisiteError(f"{path} is missing; ground truth exists only for `aefault simulate` data")
    return GroundTruth.from_dict(json.loads(path.read_text()))


def cmd_evaluate(cfg: dict) -> dict:
    ws = Workspace(cfg, "evaluate")
    pp = preprocess_config(cfg)
    series = series_from_npz(load_npz(ws, "series.npz"))
    ec = eval_config(cfg)
    segments = split_segments(series)
    truths = None
    if cfg["evaluate"].get("truth", "labels") == "ground":
        gt = _ground_truth(ws)
        truths = [
            label_windows(gt.timestamp_labels(s.start, s.rate_seconds, s.n_rows), pp.window, pp.stride)
            for s in segments
        ]
    report = run_cv(
        int(cfg["evaluate"]["scenario"]),
        segments,
        ae_config(cfg, series.n_signals, pp.window),
        ec,
        window=pp.window,
        stride=pp.stride,
        thresholds=_thresholds(cfg, series, ec.confidence),
        truths=truths,
    )
    ws.write_json("metrics.json", report.to_dict())
    write_roc_csv(ws.path("roc.csv"), report.roc_curves(), header=ws.stamp())
    agg = report.pooled_metrics()
    return {"f1": agg.f1, "precision": agg.precision, "recall": agg.recall, "jaccard": agg.jaccard}


def cmd_roc(cfg: dict) -> dict:
    ws = Workspace(cfg, "roc")
    pp = preprocess_config(cfg)
    ec = eval_config(cfg)
    rows = read_jsonl(ws.require("detections.jsonl"))
    if rows:
        ws.check_fresh("detections.jsonl", rows[0].get("config_hash"))
    stats = ws.read_json("train.json")
    series = series_from_npz(load_npz(ws, "series.npz"))
    prep = ws.read_json("preprocess.json", check=False)
    cut = int(prep["train_rows"])
    test = series.rows(cut, series.n_rows)
    truth_kind = cfg["evaluate"].get("truth", "labels")
    if truth_kind == "ground":
        ts = _ground_truth(ws).timestamp_labels(test.start, test.rate_seconds, test.n_rows)
        truth = label_windows(ts, pp.window, pp.stride)
    else:
        thresholds = _thresholds(cfg, series, ec.confidence)
        truth = auto_labels(test, thresholds, series.values[:cut], pp.window, pp.stride, ec)
    re = np.array([r["re_total"] for r in rows])
    if re.size != truth.size:
        raise DataError(f"{len(rows)} detections but {truth.size} labelled test windows")
    points = roc_curve(re, truth, ec.c_grid, stats["re_mu"], stats["re_sigma"])
    write_roc_csv(ws.path("roc.csv"), {"test": points}, header=ws.stamp())
    return {"points": len(points), "positives": int(truth.sum())}


COMMANDS = {
    "simulate": cmd_simulate,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "detect": cmd_detect,
    "localize": cmd_localize,
    "evaluate": cmd_evaluate,
    "roc": cmd_roc,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file with per-command sections")
    common.add_argument("--out", help="artifact directory (paths.out)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config entry; VALUE is parsed as JSON when possible",
    )

    parser = argparse.ArgumentParser(prog="aefault", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic plant dataset")
    p.add_argument("--scenario", help="scenario JSON with plant and faults")
    p.add_argument("--days", type=int)

    p = sub.add_parser("preprocess", parents=[common], help="resample, impute, select and window")
    p.add_argument("--data", help="raw records (CSV or JSON lines)")
    p.add_argument("--metadata", help="signal metadata JSON")
    p.add_argument("--window", type=int)
    p.add_argument("--train-fraction", type=float)

    p = sub.add_parser("train", parents=[common], help="fit the autoencoder")
    p.add_argument("--max-epochs", type=int)

    p = sub.add_parser("detect", parents=[common], help="flag anomalous test windows")
    p.add_argument("--c", type=float, help="threshold multiplier")

    p = sub.add_parser("localize", parents=[common], help="rank signals and map them to components")
    p.add_argument("--c", type=float, help="threshold multiplier")
    p.add_argument("--m", type=int, help="number of significant signals")
    p.add_argument("--lookup", help="sensor-to-component CSV")

    p = sub.add_parser("evaluate", parents=[common], help="cross-validate on ten segments")
    p.add_argument("--scenario", type=int, choices=(1, 2), help="1: last four segments, 2: all ten")
    p.add_argument("--truth", choices=("labels", "ground"))
    p.add_argument("--thresholds", help="label threshold JSON")

    p = sub.add_parser("roc", parents=[common], help="ROC points of the test detections")
    p.add_argument("--truth", choices=("labels", "ground"))
    p.add_argument("--thresholds", help="label threshold JSON")
    return parser


def flag_overrides(args: argparse.Namespace) -> dict:
    table = {
        "out": "paths.out",
        "seed": "seed",
        "data": "paths.data",
        "metadata": "paths.metadata",
        "lookup": "paths.lookup",
        "thresholds": "paths.thresholds",
        "days": "simulate.days",
        "window": "preprocess.window",
        "train_fraction": "preprocess.train_fraction",
        "max_epochs": "train.max_epochs",
        "c": "detect.c",
        "m": "detect.m",
        "truth": "evaluate.truth",
    }
    out = {dotted: getattr(args, attr, None) for attr, dotted in table.items()}
    if args.command == "simulate":
        out["simulate.scenario"] = args.scenario
    elif args.command == "evaluate":
        out["evaluate.scenario"] = args.scenario
    return out


def setup_logging() -> None:
    level = os.environ.get("AEFAULT_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set, flag_overrides(args))
        summary = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PrerequisiteError as exc:
        print(f"prerequisite error: {exc}", file=sys.stderr)
        return EXIT_PREREQUISITE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AefaultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(json.dumps({"command": args.command, **summary}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
