"""Synthetic cooling-plant telemetry with injected, labelled faults.

Each component carries a smooth "load" made of a few slow sinusoids with
seeded periods and phases. Numeric sensors add their own harmonics, a
share of the component load and white noise; boolean sensors switch on when
the load crosses a level (plus optional random alarms); counters count up
once per minute and reset periodically. Every sensor is sampled at its own
jittered rate.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .preprocessing import Records
from .timeseries import SignalKind, SignalMeta

DAY = 86_400
HOUR = 3_600
FAULT_KINDS = ("step", "drift", "stuck", "noise")


@dataclass(frozen=True)
class ComponentSpec:
    id: int
    name: str
    load_terms: int = 3
    load_period_range: tuple = (2 * HOUR, 12 * HOUR)
    day_locked: bool = False  # periods are DAY / k, so the load repeats every day


@dataclass(frozen=True)
class SensorSpec:
    name: str
    component: int
    kind: str = "numeric"
    base: float = 0.0
    harmonics: tuple = ()  # (amplitude, period seconds, phase radians)
    load_gain: float = 0.0
    noise: float = 0.0
    alarm_rate: float = 0.0
    load_level: Optional[float] = None
    increment: int = 1
    reset_period: int = 6 * HOUR
    mean_interval: float = 30.0
    jitter: float = 0.5
    failure_type: str = "1"

    def __post_init__(self) -> None:
        if self.kind not in {k.value for k in SignalKind}:
            raise ConfigError(f"{self.name}: unknown kind {self.kind!r}")
        if self.mean_interval <= 0 or not 0 <= self.jitter < 1:
            raise ConfigError(f"{self.name}: inter-arrival must be > 0 with jitter in [0, 1)")
        if self.noise < 0 or self.increment <= 0 or self.reset_period <= 0:
            raise ConfigError(f"{self.name}: noise, increment and reset period must be positive")
        object.__setattr__(self, "harmonics", tuple(tuple(map(float, h)) for h in self.harmonics))


@dataclass(frozen=True)
class PlantSpec:
    start: int
    span: int
    components: tuple
    sensors: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if self.span <= 0:
            raise ConfigError("plant span must be positive")
        ids = {c.id for c in self.components}
        for s in self.sensors:
            if s.component not in ids:
                raise ConfigError(f"{s.name} belongs to unknown component {s.component}")
        names = [s.name for s in self.sensors]
        if len(set(names)) != len(names):
            raise ConfigError("sensor names must be unique")

    @property
    def end(self) -> int:
        return self.start + self.span

    def metadata(self) -> list[SignalMeta]:
        return [
            SignalMeta(
                i,
                s.name,
                SignalKind(s.kind),
                s.increment if s.kind == SignalKind.COUNTER.value else None,
            )
            for i, s in enumerate(self.sensors)
        ]

    def component_name(self, cid: int) -> str:
        return next(c.name for c in self.components if c.id == cid)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PlantSpec":
        return cls(
            start=int(d["start"]),
            span=int(d["span"]),
            components=tuple(
                ComponentSpec(**{**c, "load_period_range": tuple(c.get("load_period_range", (2 * HOUR, 12 * HOUR)))})
                for c in d["components"]
            ),
            sensors=tuple(SensorSpec(**s) for s in d["sensors"]),
        )


@dataclass(frozen=True)
class FaultInjection:
    """A fault on one or more sensors; ``start`` is seconds after the plant start."""

    sensors: tuple
    kind: str
    start: int
    duration: int
    magnitude: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if self.kind not in FAULT_KINDS:
            raise ConfigError(f"fault kind must be one of {FAULT_KINDS}")
        if self.duration <= 0 or self.start < 0:
            raise ConfigError("fault needs start >= 0 and a positive duration")
        if not np.isfinite(self.magnitude):
            raise ConfigError("fault magnitude must be finite")

    def overlaps(self, other: "FaultInjection") -> bool:
        return self.start < other.start + other.duration and other.start < self.start + self.duration


@dataclass(frozen=True)
class GroundTruth:
    """Absolute fault windows ``[start, end)`` and the sensor ids each one touches."""

    windows: tuple  # ((start, end), ...)
    affected: tuple  # (frozenset of sensor ids, ...)

    def timestamp_labels(self, start: int, rate_seconds: int, n_rows: int) -> np.ndarray:
        """Grid row ``t`` is faulty when ``[t, t + r)`` overlaps a fault window."""
        t0 = start + rate_seconds * np.arange(n_rows, dtype=np.int64)
        out = np.zeros(n_rows, dtype=bool)
        for lo, hi in self.windows:
            out |= (t0 < hi) & (t0 + rate_seconds > lo)
        return out

    def affected_at(self, start: int, rate_seconds: int, n_rows: int) -> list[frozenset]:
        t0 = start + rate_seconds * np.arange(n_rows, dtype=np.int64)
        out = [frozenset() for _ in range(n_rows)]
        for (lo, hi), ids in zip(self.windows, self.affected):
            for r in np.nonzero((t0 < hi) & (t0 + rate_seconds > lo))[0]:
                out[r] = out[r] | ids
        return out

    def to_dict(self) -> dict:
        return {
            "faults": [
                {"start": lo, "end": hi, "sensors": sorted(ids)}
                for (lo, hi), ids in zip(self.windows, self.affected)
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        faults = d["faults"]
        return cls(
            tuple((int(f["start"]), int(f["end"])) for f in faults),
            tuple(frozenset(f["sensors"]) for f in faults),
        )


@dataclass
class Simulation:
    records: Records
    truth: GroundTruth
    meta: list = field(default_factory=list)


def _component_load(spec: PlantSpec, comp: ComponentSpec, seed: int):
    rng = np.random.default_rng([seed, 1_000 + comp.id])
    lo, hi = comp.load_period_range
    if comp.day_locked:
        ks = np.arange(int(np.ceil(DAY / hi)), int(DAY // lo) + 1)
        if ks.size < comp.load_terms:
            raise ConfigError(f"{comp.name}: too few whole-day divisors in {comp.load_period_range}")
        periods = DAY / rng.choice(ks, comp.load_terms, replace=False)
    else:
        periods = rng.uniform(lo, hi, comp.load_terms)
    phases = rng.uniform(0, 2 * np.pi, comp.load_terms)
    amp = np.sqrt(2.0 / comp.load_terms)  # unit variance overall

    def load(t: np.ndarray) -> np.ndarray:
        x = (t - spec.start)[:, None] / periods[None, :]
        return amp * np.sin(2 * np.pi * x + phases).sum(axis=1)

    return load


def _sample_times(spec: PlantSpec, sensor: SensorSpec, rng) -> np.ndarray:
    n_est = int(spec.span / (sensor.mean_interval * (1 - sensor.jitter))) + 2
    gaps = sensor.mean_interval * (1.0 + sensor.jitter * rng.uniform(-1.0, 1.0, n_est))
    gaps = np.maximum(np.rint(gaps).astype(np.int64), 1)
    first = int(rng.integers(0, max(int(sensor.mean_interval), 1)))
    t = spec.start + first + np.concatenate([[0], np.cumsum(gaps[:-1])])
    return t[t < spec.end]


def _sensor_values(spec: PlantSpec, sensor: SensorSpec, t: np.ndarray, load, rng) -> np.ndarray:
    rel = (t - spec.start).astype(np.float64)
    if sensor.kind == SignalKind.COUNTER.value:
        ticks = np.floor((rel % sensor.reset_period) / 60.0)
        return sensor.increment * ticks
    if sensor.kind == SignalKind.BOOLEAN.value:
        on = np.zeros(t.size, dtype=bool)
        if sensor.load_level is not None:
            on |= load(t) > sensor.load_level
        if sensor.alarm_rate > 0:
            on |= rng.random(t.size) < sensor.alarm_rate
        return on.astype(np.float64)
    v = np.full(t.size, float(sensor.base))
    for amp, period, phase in sensor.harmonics:
        v += amp * np.sin(2 * np.pi * rel / period + phase)
    if sensor.load_gain:
        v += sensor.load_gain * load(t)
    if sensor.noise:
        v += rng.normal(0.0, sensor.noise, t.size)
    return v


def _apply_fault(values, t, fault: FaultInjection, kind: str, lo: int, hi: int, rng):
    hit = (t >= lo) & (t < hi)
    if not hit.any():
        return values
    v = values.copy()
    if kind == SignalKind.BOOLEAN.value:
        v[hit] = 1.0
    elif fault.kind == "step":
        v[hit] += fault.magnitude
    elif fault.kind == "drift":
        v[hit] += fault.magnitude * (t[hit] - lo) / (hi - lo)
    elif fault.kind == "stuck":
        before = np.nonzero(t < lo)[0]
        v[hit] = values[before[-1]] if before.size else values[hit][0]
    else:
        v[hit] += fault.magnitude * rng.standard_normal(int(hit.sum()))
    return v


def _resolve_sensor(spec: PlantSpec, ref) -> int:
    if isinstance(ref, (int, np.integer)):
        if not 0 <= ref < len(spec.sensors):
            raise ConfigError(f"fault targets unknown sensor id {ref}")
        return int(ref)
    for i, s in enumerate(spec.sensors):
        if s.name == ref:
            return i
    raise ConfigError(f"fault targets unknown sensor {ref!r}")


def simulate(spec: PlantSpec, faults: Sequence[FaultInjection] = (), seed: int = 0) -> Simulation:
    """Generate irregular records plus ground truth; deterministic per seed.

    Every sensor draws from its own generator keyed on ``(seed, sensor
    index)``, so sensors can be produced in any order with identical output.
    """
    targets = []
    for f in faults:
        if f.start + f.duration > spec.span:
            raise ConfigError("fault window extends beyond the simulated span")
        targets.append({_resolve_sensor(spec, s) for s in f.sensors})
    for a in range(len(faults)):
        for b in range(a + 1, len(faults)):
            if targets[a] & targets[b] and faults[a].overlaps(faults[b]):
                raise ConfigError(
                    f"faults {a} and {b} overlap in time on sensors {sorted(targets[a] & targets[b])}"
                )

    loads = {c.id: _component_load(spec, c, seed) for c in spec.components}
    ts, sig, val = [], [], []
    for i, sensor in enumerate(spec.sensors):
        rng = np.random.default_rng([seed, i])
        t = _sample_times(spec, sensor, rng)
        v = _sensor_values(spec, sensor, t, loads[sensor.component], rng)
        for f, tgt in zip(faults, targets):
            if i in tgt:
                lo = spec.start + f.start
                v = _apply_fault(v, t, f, sensor.kind, lo, lo + f.duration, rng)
        ts.append(t)
        sig.append(np.full(t.size, i, dtype=np.int64))
        val.append(v)

    ts_all = np.concatenate(ts) if ts else np.zeros(0, np.int64)
    sig_all = np.concatenate(sig) if sig else np.zeros(0, np.int64)
    val_all = np.concatenate(val) if val else np.zeros(0)
    order = np.lexsort((sig_all, ts_all))
    truth = GroundTruth(
        tuple((spec.start + f.start, spec.start + f.start + f.duration) for f in faults),
        tuple(frozenset(t) for t in targets),
    )
    return Simulation(Records(ts_all[order], sig_all[order], val_all[order]), truth, spec.metadata())


MINI_PLANT_START = 1_614_556_800  # 2021-03-01 00:00 UTC, a Monday


def mini_plant(days: int = 14, start: int = MINI_PLANT_START, seed: int = 7) -> PlantSpec:
    """Desk-scale plant: 12 sensors in 4 components (11 numeric, 1 counter).

    ``seed`` only shapes the static layout (bases, amplitudes, phases); the
    simulated noise comes from :func:`simulate`'s own seed.
    """
    rng = np.random.default_rng(seed)
    components = tuple(ComponentSpec(c, f"Component {c + 1}", day_locked=True) for c in range(4))
    sensors = []
    for i in range(12):
        comp = i // 3
        name = f"Sensor {i + 1}"
        if i == 8:
            sensors.append(
                SensorSpec(name, comp, kind="counter", increment=1, reset_period=6 * HOUR,
                           mean_interval=20.0, jitter=0.3, failure_type=str(comp + 1))
            )
            continue
        sensors.append(
            SensorSpec(
                name,
                comp,
                base=float(rng.uniform(5, 50)),
                harmonics=(
                    (float(rng.uniform(2.0, 3.0)), DAY, float(rng.uniform(0, 2 * np.pi))),
                    (float(rng.uniform(1.0, 1.5)), HOUR, float(rng.uniform(0, 2 * np.pi))),
                ),
                load_gain=float(rng.choice([-1, 1]) * rng.uniform(1.5, 2.5)),
                noise=0.3,
                mean_interval=float(rng.uniform(15, 75)),
                jitter=0.5,
                failure_type=str(comp + 1),
            )
        )
    return PlantSpec(start, days * DAY, components, tuple(sensors))


def lookup_rows(spec: PlantSpec) -> list[tuple[str, str, str]]:
    """(sensor, component, failure type) for every sensor of a plant."""
    return [(s.name, spec.component_name(s.component), s.failure_type) for s in spec.sensors]


def load_scenario(path) -> tuple[PlantSpec, list[FaultInjection]]:
    """Read ``{"plant": {...}, "faults": [...]}``; ``"plant": "mini"`` selects the built-in plant."""
    doc = json.loads(Path(path).read_text())
    plant = doc.get("plant", "mini")
    if plant == "mini" or isinstance(plant, dict) and plant.get("preset") == "mini":
        opts = {} if plant == "mini" else {k: v for k, v in plant.items() if k != "preset"}
        spec = mini_plant(**opts)
    else:
        spec = PlantSpec.from_dict(plant)
    faults = [FaultInjection(**f) for f in doc.get("faults", [])]
    return spec, faults
