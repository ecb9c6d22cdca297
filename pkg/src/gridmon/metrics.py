"""Connectivity metrics and the theodolite measurement store.

A metric has a polarity: for some metrics (throughput) larger values are
better, for loss-like metrics smaller values are better. Values of the same
metric are totally ordered through :func:`compare`; values of different
metrics are never compared and never combined.
"""

from __future__ import annotations

import enum
import functools
import json
import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from gridmon.errors import (
    DuplicateMetric,
    InvalidRange,
    MetricMismatch,
    NonFinite,
    NotATheodolite,
    OutOfRange,
    UndesignatedPair,
    UnknownEntity,
    UnknownMetric,
    UnknownTheodolite,
)
from gridmon.registry import Registry, check_id


class Polarity(str, enum.Enum):
    HIGHER_IS_BETTER = "HigherIsBetter"
    LOWER_IS_BETTER = "LowerIsBetter"

    @classmethod
    def parse(cls, value: str | Polarity) -> Polarity:
        if isinstance(value, Polarity):
            return value
        key = value.replace("_", "").replace("-", "").lower()
        for p in cls:
            if key in (p.value.lower(), p.name.replace("_", "").lower()):
                return p
        aliases = {"higher": cls.HIGHER_IS_BETTER, "lower": cls.LOWER_IS_BETTER}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown polarity {value!r}")


class Ordering(str, enum.Enum):
    BETTER = "better"
    EQUAL = "equal"
    WORSE = "worse"


@dataclass(frozen=True)
class MetricDefinition:
    name: str
    polarity: Polarity
    unit: str | None = None
    range: tuple[float, float] | None = None

    @property
    def lower_is_better(self) -> bool:
        return self.polarity is Polarity.LOWER_IS_BETTER

    def sort_key(self, value: float) -> float:
        """Key under which ascending order is best-first."""
        return value if self.lower_is_better else -value

    def to_record(self) -> dict:
        rec: dict = {"metric": self.name, "polarity": self.polarity.value,
                     "unit": self.unit}
        rec["range"] = list(self.range) if self.range is not None else None
        return rec


@functools.total_ordering
@dataclass(frozen=True)
class ConnectivityValue:
    """A value of one metric; ``a > b`` means ``a`` is the better value."""

    metric: MetricDefinition
    value: float

    def better_than(self, other: ConnectivityValue) -> bool:
        return compare(self, other) is Ordering.BETTER

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, ConnectivityValue):
            return NotImplemented
        return compare(self, other) is Ordering.WORSE


def compare(a: ConnectivityValue, b: ConnectivityValue) -> Ordering:
    """Order ``a`` relative to ``b`` under their shared metric's polarity."""
    if a.metric.name != b.metric.name:
        raise MetricMismatch(f"cannot compare {a.metric.name} with {b.metric.name}")
    if a.value == b.value:
        return Ordering.EQUAL
    a_larger = a.value > b.value
    if a.metric.lower_is_better:
        return Ordering.WORSE if a_larger else Ordering.BETTER
    return Ordering.BETTER if a_larger else Ordering.WORSE


@dataclass(frozen=True)
class Measurement:
    metric: str
    theodolite_a: str
    theodolite_b: str
    value: float
    timestamp: float
    # older than the newest timestamp already stored for the stream
    stale: bool = field(default=False, compare=False)

    @property
    def stream(self) -> tuple[str, str, str]:
        return (self.metric, self.theodolite_a, self.theodolite_b)

    def to_record(self) -> dict:
        return {"metric": self.metric, "ta": self.theodolite_a,
                "tb": self.theodolite_b, "value": self.value, "ts": self.timestamp}

    def to_line(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))

    @classmethod
    def from_record(cls, rec: dict) -> Measurement:
        """Parse one wire-format object (``metric, ta, tb, value, ts``)."""
        missing = {"metric", "ta", "tb", "value", "ts"} - rec.keys()
        if missing:
            raise ValueError(f"measurement record missing fields {sorted(missing)}")
        value, ts = rec["value"], rec["ts"]
        for k, v in (("value", value), ("ts", ts)):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError(f"measurement field {k!r} must be a number")
        return cls(str(rec["metric"]), str(rec["ta"]), str(rec["tb"]),
                   float(value), float(ts))


def parse_lines(text: str) -> Iterator[tuple[int, Measurement]]:
    """Yield ``(line_number, measurement)`` for each non-blank NDJSON line."""
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.strip():
            yield lineno, Measurement.from_record(json.loads(line))


class MetricStore:
    """Metric catalog plus an append-only measurement log.

    Ingestion is checked against a :class:`Registry`: both endpoints must be
    theodolites and the ordered pair must be designated. Each stream
    ``(metric, ta, tb)`` keeps its full history; :meth:`latest` returns the
    record with the greatest timestamp, later arrivals winning ties.
    """

    def __init__(self, registry: Registry):
        self.registry = registry
        self._lock = threading.Lock()
        self._metrics: dict[str, MetricDefinition] = {}
        self._log: list[Measurement] = []
        self._streams: dict[tuple[str, str, str], list[Measurement]] = {}
        self._latest: dict[tuple[str, str, str], Measurement] = {}
        registry.attach_store(self)

    # -- catalog ----------------------------------------------------------

    def define_metric(
        self,
        name: str,
        polarity: Polarity | str,
        unit: str | None = None,
        range: tuple[float, float] | None = None,
    ) -> MetricDefinition:
        check_id(name, "metric name")
        if range is not None:
            lo, hi = (float(x) for x in range)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise InvalidRange(f"empty or non-finite range [{lo}, {hi}]")
            range = (lo, hi)
        definition = MetricDefinition(name, Polarity.parse(polarity), unit, range)
        with self._lock:
            if name in self._metrics:
                raise DuplicateMetric(f"metric {name!r} already defined")
            self._metrics[name] = definition
        return definition

    def metric(self, name: str) -> MetricDefinition:
        try:
            return self._metrics[name]
        except KeyError:
            raise UnknownMetric(f"unknown metric {name!r}") from None

    def metrics(self) -> list[MetricDefinition]:
        return sorted(self._metrics.values(), key=lambda m: m.name)

    # -- ingestion --------------------------------------------------------

    def _check_theodolite(self, tid: str) -> None:
        try:
            ent = self.registry.entity(tid)
        except UnknownEntity:
            raise UnknownTheodolite(f"unknown theodolite {tid!r}") from None
        if not ent.is_theodolite:
            raise NotATheodolite(f"entity {tid!r} is a {ent.kind.value} entity")

    def ingest(
        self, metric: str, t_a: str, t_b: str, value: float, timestamp: float
    ) -> Measurement:
        """Validate and append one measurement; returns it with ``stale`` set."""
        definition = self.metric(metric)
        self._check_theodolite(t_a)
        self._check_theodolite(t_b)
        if not self.registry.is_designated_pair(t_a, t_b):
            raise UndesignatedPair(f"({t_a}, {t_b}) is not a designated theodolite pair")
        value, timestamp = float(value), float(timestamp)
        if not math.isfinite(value):
            raise NonFinite(f"value {value} is not finite")
        if not math.isfinite(timestamp):
            raise NonFinite(f"timestamp {timestamp} is not finite")
        if definition.range is not None:
            lo, hi = definition.range
            if not lo <= value <= hi:
                raise OutOfRange(f"{metric} value {value} outside [{lo}, {hi}]")
        key = (metric, t_a, t_b)
        with self._lock:
            current = self._latest.get(key)
            stale = current is not None and timestamp < current.timestamp
            m = Measurement(metric, t_a, t_b, value, timestamp, stale)
            self._log.append(m)
            self._streams.setdefault(key, []).append(m)
            if not stale:
                self._latest[key] = m
        return m

    def ingest_measurement(self, m: Measurement) -> Measurement:
        return self.ingest(m.metric, m.theodolite_a, m.theodolite_b, m.value, m.timestamp)

    def ingest_many(self, items: Iterable[Measurement]) -> list[Measurement]:
        return [self.ingest_measurement(m) for m in items]

    # -- reads ------------------------------------------------------------

    def latest(self, metric: str, t_a: str, t_b: str) -> ConnectivityValue | None:
        definition = self.metric(metric)
        m = self._latest.get((metric, t_a, t_b))
        if m is None:
            return None
        return ConnectivityValue(definition, m.value)

    def latest_measurement(self, metric: str, t_a: str, t_b: str) -> Measurement | None:
        self.metric(metric)
        return self._latest.get((metric, t_a, t_b))

    def history(self, metric: str, t_a: str, t_b: str) -> list[Measurement]:
        with self._lock:
            return list(self._streams.get((metric, t_a, t_b), ()))

    def log(self) -> list[Measurement]:
        """Every accepted measurement in arrival order."""
        with self._lock:
            return list(self._log)

    def has_measurements_for(self, t_a: str, t_b: str, metric: str | None = None) -> bool:
        with self._lock:
            return any(k[1:] == (t_a, t_b) and (metric is None or k[0] == metric)
                       for k in self._streams)

    def purge_pair(self, t_a: str, t_b: str) -> int:
        """Delete every measurement on ``(t_a, t_b)``; returns how many."""
        with self._lock:
            keys = [k for k in self._streams if k[1:] == (t_a, t_b)]
            for k in keys:
                del self._streams[k]
                self._latest.pop(k, None)
            before = len(self._log)
            self._log = [m for m in self._log
                         if (m.theodolite_a, m.theodolite_b) != (t_a, t_b)]
            return before - len(self._log)

    def __len__(self) -> int:
        return len(self._log)
