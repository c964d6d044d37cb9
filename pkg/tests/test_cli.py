import json
import os

import pytest

from aefault.cli import main

FAST = [
    "--set", "simulate.days=3",
    "--set", 'simulate.faults=[{"sensors": ["Sensor 3"], "kind": "step", "start": 216000, "duration": 14400, "magnitude": 15.0}]',
    "--set", 'train.encoder_widths=[8, 4]',
    "--set", "train.max_epochs=2",
    "--set", "train.batch_size=32",
]


@pytest.fixture
def fixed_clock(monkeypatch):
    monkeypatch.setenv("AEFAULT_FIXED_CLOCK", "2026-01-01T00:00:00Z")


def run(out, *args):
    return main([*args, "--out", str(out), *FAST])


def chain(out):
    for cmd in ("simulate", "preprocess", "train", "detect", "localize", "roc"):
        assert run(out, cmd) == 0, cmd


def test_full_chain_writes_artifacts(tmp_path, fixed_clock):
    chain(tmp_path)
    for name in ("records.csv", "metadata.json", "lookup.csv", "series.npz", "windows.npz",
                 "model.aefm", "history.csv", "detections.jsonl", "localized.jsonl", "rootcause.json", "roc.csv"):
        assert (tmp_path / name).exists(), name
    lines = (tmp_path / "detections.jsonl").read_text().splitlines()
    rows = [json.loads(line) for line in lines]
    assert rows and all("config_hash" in r for r in rows)
    assert any(r["is_anomalous"] for r in rows)
    assert (tmp_path / "roc.csv").read_text().startswith("#")


def test_reruns_are_byte_identical(tmp_path, fixed_clock):
    a, b = tmp_path / "a", tmp_path / "b"
    chain(a)
    chain(b)
    for name in ("detections.jsonl", "localized.jsonl", "rootcause.json", "roc.csv", "model.aefm"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_missing_prerequisite_exits_3(tmp_path, capsys):
    assert run(tmp_path, "detect") == 3
    assert "aefault" in capsys.readouterr().err


def test_stale_model_is_refused(tmp_path, capsys):
    for cmd in ("simulate", "preprocess", "train"):
        assert run(tmp_path, cmd) == 0
    assert main(["detect", "--out", str(tmp_path), *FAST, "--set", "train.max_epochs=3"]) == 3
    assert "train" in capsys.readouterr().err


def test_bad_config_exits_2(tmp_path):
    assert run(tmp_path, "simulate") == 0
    assert run(tmp_path, "preprocess", "--window", "0") == 2
    assert main(["simulate", "--out", str(tmp_path), "--set", "nonsense"]) == 2


def test_config_file_sections(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"simulate": {"days": 2, "faults": []}}))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    truth = json.loads((tmp_path / "o" / "ground_truth.json").read_text())
    assert truth["faults"] == []


def test_embedded_hash_matches_recomputation(tmp_path):
    from aefault.cli import config_hash, load_config

    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"seed": 5, "simulate": {"days": 2, "faults": []}, "detect": {"m": 4}}))
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg_file), "--out", str(out)]) == 0
    manifest = json.loads((out / "simulate.json").read_text())
    assert manifest["config_hash"] == config_hash(load_config(str(cfg_file)), "simulate")
    header = [line for line in (out / "records.csv").read_text().splitlines() if line.startswith("#")]
    assert "# config_hash=" + manifest["config_hash"] in header
