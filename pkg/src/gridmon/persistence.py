"""Snapshot files.

Two line-oriented JSON files hold the whole state:

registry snapshot
    metric definitions (``metric, polarity, unit, range``), then entities
    (``entity, kind, domain``), then designations (``domain_a, domain_b,
    theodolite_a, theodolite_b``), each block sorted by key;
measurement log
    accepted measurements in arrival order, in the ingestion wire format
    (``metric, ta, tb, value, ts``).

Files are replaced by write-to-temp plus ``os.replace``, so an interrupted
save leaves the previous file in place.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from gridmon.errors import CorruptSnapshot, GridMonError, IoFailure
from gridmon.metrics import Measurement, MetricStore
from gridmon.registry import Registry

ENTITY_FIELDS = frozenset({"entity", "kind", "domain"})
DESIGNATION_FIELDS = frozenset({"domain_a", "domain_b", "theodolite_a", "theodolite_b"})
METRIC_FIELDS = frozenset({"metric", "polarity", "unit", "range"})


def _dumps(rec: dict) -> str:
    return json.dumps(rec, separators=(",", ":"))


def registry_lines(registry: Registry, store: MetricStore | None = None) -> list[str]:
    lines = [_dumps(m.to_record()) for m in store.metrics()] if store is not None else []
    lines += [_dumps({"entity": e.id, "kind": e.kind.value, "domain": e.domain})
              for e in registry.entities()]
    lines += [_dumps({"domain_a": d.domain_a, "domain_b": d.domain_b,
                      "theodolite_a": d.theodolite_a, "theodolite_b": d.theodolite_b})
              for d in registry.designations()]
    return lines


def log_lines(store: MetricStore) -> list[str]:
    return [m.to_line() for m in store.log()]


def atomic_write(path: str | os.PathLike, lines: list[str]) -> None:
    """Replace ``path`` with ``lines``; on failure the old file is untouched."""
    path = Path(path)
    tmp = None
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.writelines(line + "\n" for line in lines)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
        tmp = None
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    finally:
        if tmp is not None:
            try:
                os.unlink(tmp)
            except OSError:
                pass


def save(
    registry: Registry,
    store: MetricStore,
    snapshot_path: str | os.PathLike,
    log_path: str | os.PathLike | None = None,
) -> None:
    """Persist the registry snapshot and, if ``log_path`` is given, the log.

    State is copied first, so writers are blocked only for the copy.
    """
    reg = registry_lines(registry, store)
    log = log_lines(store) if log_path is not None else None
    # registry first: a log never references designations missing on disk
    atomic_write(snapshot_path, reg)
    if log is not None:
        atomic_write(log_path, log)


def _read(path: str | os.PathLike) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def load_registry(
    path: str | os.PathLike,
    registry: Registry | None = None,
    store: MetricStore | None = None,
) -> tuple[Registry, MetricStore]:
    """Load a registry snapshot, rejecting any invariant violation.

    All records are parsed first; metrics and entities are applied before
    designations, so record order within the file does not matter.

    Raises:
        CorruptSnapshot: names the file and the 1-based offending line.
    """
    registry = registry if registry is not None else Registry()
    store = store if store is not None else MetricStore(registry)
    src = str(path)
    metrics, entities, designations = [], [], []
    for lineno, line in enumerate(_read(path), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptSnapshot(src, lineno, f"invalid JSON: {exc.msg}") from None
        keys = frozenset(rec) if isinstance(rec, dict) else frozenset()
        if keys == ENTITY_FIELDS:
            entities.append((lineno, rec))
        elif keys == DESIGNATION_FIELDS:
            designations.append((lineno, rec))
        elif "polarity" in keys and keys <= METRIC_FIELDS:
            metrics.append((lineno, rec))
        else:
            raise CorruptSnapshot(src, lineno, f"unrecognised record fields {sorted(keys)}")

    def apply(lineno: int, fn, *args) -> None:
        try:
            fn(*args)
        except (GridMonError, ValueError, TypeError) as exc:
            name = exc.name if isinstance(exc, GridMonError) else type(exc).__name__
            raise CorruptSnapshot(src, lineno, f"{name}: {exc}") from exc

    for lineno, rec in metrics:
        rng = rec.get("range")
        apply(lineno, store.define_metric, rec["metric"], rec["polarity"], rec.get("unit"),
              tuple(rng) if rng is not None else None)
    for lineno, rec in entities:
        apply(lineno, registry.register_entity, rec["entity"], rec["kind"], rec["domain"])
    for lineno, rec in designations:
        apply(lineno, registry.designate_theodolites, rec["domain_a"], rec["domain_b"],
              rec["theodolite_a"], rec["theodolite_b"])
    return registry, store


def load_log(path: str | os.PathLike, store: MetricStore) -> int:
    """Replay a measurement log into ``store``; returns the record count."""
    src = str(path)
    count = 0
    for lineno, line in enumerate(_read(path), 1):
        if not line.strip():
            continue
        try:
            m = Measurement.from_record(json.loads(line))
            store.ingest_measurement(m)
        except (GridMonError, ValueError, TypeError, AttributeError) as exc:
            name = exc.name if isinstance(exc, GridMonError) else type(exc).__name__
            raise CorruptSnapshot(src, lineno, f"{name}: {exc}") from exc
        count += 1
    return count


def load(
    snapshot_path: str | os.PathLike, log_path: str | os.PathLike | None = None
) -> tuple[Registry, MetricStore]:
    """Load state from disk; missing files load as empty state."""
    registry = Registry()
    store = MetricStore(registry)
    if Path(snapshot_path).exists():
        load_registry(snapshot_path, registry, store)
    if log_path is not None and Path(log_path).exists():
        load_log(log_path, store)
    return registry, store
