"""JSON-over-HTTP service.

Endpoints (all bodies and responses are JSON unless noted)::

    GET  /health
    POST /metrics            {"metric", "polarity", "unit"?, "range"?}
    POST /entities           {"entity", "kind", "domain"}
    POST /designations       {"domain_a", "domain_b", "theodolite_a", "theodolite_b"}
    POST /ingest             newline-delimited measurement records
    GET  /query/between      ?metric=&from=&to=
    GET  /query/to-kind      ?metric=&from=&kind=
    GET  /query/best         ?metric=&from=&kind=
    GET  /partners           ?theodolite=
    POST /validate           view document; ?rho=&epsilon= override config
    GET  /coverage           ?metric=
    POST /snapshot

Successful calls answer ``{"ok": true, "result": ...}``. Failures answer
``{"ok": false, "error": <error class name>, "message": ...}``.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import asdict, dataclass, field
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Callable
from urllib.parse import parse_qs, urlsplit

from gridmon import persistence
from gridmon.errors import (
    AlreadyDesignated,
    BindFailure,
    DesignationInUse,
    DuplicateEntity,
    DuplicateMetric,
    EntityInUse,
    GridMonError,
    InvalidConfig,
)
from gridmon.metrics import Measurement, MetricStore
from gridmon.query import QueryEngine
from gridmon.registry import EntityKind, Registry
from gridmon.validator import (
    DEFAULT_EPSILON,
    DEFAULT_RHO,
    IntraDomainView,
    coverage_gaps,
    validate_domain,
)

log = logging.getLogger(__name__)

ENV_LISTEN = "GRIDMON_LISTEN"
ENV_SNAPSHOT = "GRIDMON_SNAPSHOT"
ENV_LOG = "GRIDMON_LOG"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8650
    snapshot_path: str = "registry.jsonl"
    log_path: str = "measurements.jsonl"
    rho: float = DEFAULT_RHO
    epsilon: float = DEFAULT_EPSILON
    snapshot_interval: float = 60.0
    # metric definitions created at startup when absent from the snapshot
    metrics: list[dict] = field(default_factory=list)

    def check(self) -> None:
        if Path(self.snapshot_path).resolve() == Path(self.log_path).resolve():
            raise InvalidConfig("snapshot_path and log_path must differ")
        if not self.rho > 1:
            raise InvalidConfig(f"rho must be > 1, got {self.rho}")
        if not 0 < self.epsilon < 1:
            raise InvalidConfig(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not self.snapshot_interval > 0:
            raise InvalidConfig("snapshot_interval must be > 0")
        if not 0 <= self.port < 65536:
            raise InvalidConfig(f"bad port {self.port}")

    @classmethod
    def load(
        cls, path: str | os.PathLike | None = None, env: dict[str, str] | None = None
    ) -> ServiceConfig:
        """Read an optional JSON config file, then apply environment overrides."""
        env = os.environ if env is None else env
        values: dict[str, Any] = {}
        if path is not None:
            try:
                values = json.loads(Path(path).read_text())
            except (OSError, ValueError) as exc:
                raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
            unknown = set(values) - set(cls.__dataclass_fields__)
            if unknown:
                raise InvalidConfig(f"unknown config keys {sorted(unknown)}")
        if ENV_LISTEN in env:
            host, _, port = env[ENV_LISTEN].rpartition(":")
            if not host or not port.isdigit():
                raise InvalidConfig(f"{ENV_LISTEN} must be host:port")
            values.update(host=host, port=int(port))
        if ENV_SNAPSHOT in env:
            values["snapshot_path"] = env[ENV_SNAPSHOT]
        if ENV_LOG in env:
            values["log_path"] = env[ENV_LOG]
        config = cls(**values)
        config.check()
        return config


def _status_for(exc: GridMonError) -> HTTPStatus:
    if isinstance(exc, LookupError):
        return HTTPStatus.NOT_FOUND
    if isinstance(exc, (DuplicateEntity, DuplicateMetric, AlreadyDesignated,
                        EntityInUse, DesignationInUse)):
        return HTTPStatus.CONFLICT
    return HTTPStatus.BAD_REQUEST


class BadRequest(GridMonError, ValueError):
    """Malformed request: bad JSON, missing parameter, unknown route."""


class GridService:
    """Registry, store and query engine behind a request dispatcher.

    :meth:`handle` is transport-independent; the HTTP server is a thin
    adapter over it.
    """

    def __init__(self, config: ServiceConfig, registry: Registry | None = None,
                 store: MetricStore | None = None):
        self.config = config
        self.registry = registry if registry is not None else Registry()
        self.store = store if store is not None else MetricStore(self.registry)
        self.query = QueryEngine(self.registry, self.store)
        self._snapshot_lock = threading.Lock()
        self._routes: dict[tuple[str, str], Callable[[dict, bytes], Any]] = {
            ("GET", "/health"): lambda q, b: {"entities": len(self.registry),
                                             "measurements": len(self.store)},
            ("POST", "/metrics"): self._define_metric,
            ("POST", "/entities"): self._register,
            ("POST", "/designations"): self._designate,
            ("POST", "/ingest"): self._ingest,
            ("GET", "/query/between"): self._between,
            ("GET", "/query/to-kind"): self._to_kind,
            ("GET", "/query/best"): self._best,
            ("GET", "/partners"): self._partners,
            ("POST", "/validate"): self._validate,
            ("GET", "/coverage"): self._coverage,
            ("POST", "/snapshot"): self._snapshot,
        }

    @classmethod
    def from_config(cls, config: ServiceConfig) -> GridService:
        """Load persisted state; raises CorruptSnapshot on a bad file."""
        registry, store = persistence.load(config.snapshot_path, config.log_path)
        for m in config.metrics:
            if m["metric"] not in {d.name for d in store.metrics()}:
                rng = m.get("range")
                store.define_metric(m["metric"], m["polarity"], m.get("unit"),
                                    tuple(rng) if rng is not None else None)
        return cls(config, registry, store)

    # -- dispatch ---------------------------------------------------------

    def handle(self, method: str, path: str, body: bytes = b"") -> tuple[int, dict]:
        parts = urlsplit(path)
        query = {k: v[-1] for k, v in parse_qs(parts.query).items()}
        try:
            route = self._routes.get((method.upper(), parts.path))
            if route is None:
                raise BadRequest(f"no route {method} {parts.path}")
            result = route(query, body)
        except GridMonError as exc:
            return _status_for(exc), {"ok": False, "error": exc.name, "message": str(exc)}
        return HTTPStatus.OK, {"ok": True, "result": result}

    @staticmethod
    def _json(body: bytes) -> dict:
        try:
            doc = json.loads(body or b"{}")
        except ValueError as exc:
            raise BadRequest(f"invalid JSON body: {exc}") from None
        if not isinstance(doc, dict):
            raise BadRequest("JSON body must be an object")
        return doc

    @staticmethod
    def _need(params: dict, *names: str) -> list:
        missing = [n for n in names if n not in params]
        if missing:
            raise BadRequest(f"missing parameters {missing}")
        return [params[n] for n in names]

    # -- handlers ---------------------------------------------------------

    def _define_metric(self, q: dict, body: bytes) -> dict:
        doc = self._json(body)
        name, polarity = self._need(doc, "metric", "polarity")
        rng = doc.get("range")
        try:
            m = self.store.define_metric(name, polarity, doc.get("unit"),
                                         tuple(rng) if rng is not None else None)
        except ValueError as exc:
            if isinstance(exc, GridMonError):
                raise
            raise BadRequest(str(exc)) from None
        return m.to_record()

    def _register(self, q: dict, body: bytes) -> dict:
        doc = self._json(body)
        eid, kind, domain = self._need(doc, "entity", "kind", "domain")
        try:
            e = self.registry.register_entity(eid, kind, domain)
        except ValueError as exc:
            if isinstance(exc, GridMonError):
                raise
            raise BadRequest(str(exc)) from None
        return {"entity": e.id, "kind": e.kind.value, "domain": e.domain}

    def _designate(self, q: dict, body: bytes) -> dict:
        doc = self._json(body)
        args = self._need(doc, "domain_a", "domain_b", "theodolite_a", "theodolite_b")
        d = self.registry.designate_theodolites(*args)
        return asdict(d)

    def _ingest(self, q: dict, body: bytes) -> dict:
        """Apply records in order; stop at the first rejected one.

        Records before the failing line stay accepted; the error response
        carries the failing line number and the accepted count.
        """
        accepted = stale = 0
        for lineno, line in enumerate(body.decode("utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                m = Measurement.from_record(json.loads(line))
            except (ValueError, AttributeError) as exc:
                raise BadRequest(f"line {lineno}: {exc} ({accepted} accepted)") from None
            try:
                stored = self.store.ingest_measurement(m)
            except GridMonError as exc:
                exc.args = (f"line {lineno}: {exc} ({accepted} accepted)",)
                raise
            accepted += 1
            stale += stored.stale
        return {"accepted": accepted, "stale": stale}

    def _between(self, q: dict, body: bytes) -> dict | None:
        metric, a, b = self._need(q, "metric", "from", "to")
        r = self.query.metric_between(metric, a, b)
        return r.to_record() if r is not None else None

    def _kind(self, q: dict) -> tuple[str, str, str]:
        metric, a, kind = self._need(q, "metric", "from", "kind")
        try:
            EntityKind.parse(kind)
        except ValueError as exc:
            raise BadRequest(str(exc)) from None
        return metric, a, kind

    def _to_kind(self, q: dict, body: bytes) -> list[dict]:
        return [r.to_record() for r in self.query.metric_to_kind(*self._kind(q))]

    def _best(self, q: dict, body: bytes) -> dict | None:
        r = self.query.best_partner(*self._kind(q))
        return r.to_record() if r is not None else None

    def _partners(self, q: dict, body: bytes) -> list[str]:
        (t,) = self._need(q, "theodolite")
        return self.query.partner_theodolites(t)

    def _validate(self, q: dict, body: bytes) -> dict:
        doc = self._json(body)
        try:
            view = IntraDomainView.from_json(doc)
            rho = float(q.get("rho", doc.get("rho", self.config.rho)))
            epsilon = float(q.get("epsilon", doc.get("epsilon", self.config.epsilon)))
        except (KeyError, TypeError, ValueError) as exc:
            raise BadRequest(f"bad view document: {exc}") from None
        try:
            return validate_domain(view, rho, epsilon).to_json()
        except ValueError as exc:
            if isinstance(exc, GridMonError):
                raise
            raise BadRequest(str(exc)) from None

    def _coverage(self, q: dict, body: bytes) -> list[dict]:
        return [g.to_json() for g in coverage_gaps(self.registry, self.store, q.get("metric"))]

    def _snapshot(self, q: dict, body: bytes) -> dict:
        self.snapshot()
        return {"snapshot_path": self.config.snapshot_path, "log_path": self.config.log_path}

    def snapshot(self) -> None:
        with self._snapshot_lock:
            persistence.save(self.registry, self.store,
                             self.config.snapshot_path, self.config.log_path)


class _Handler(BaseHTTPRequestHandler):
    service: GridService

    def _respond(self, method: str) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        status, payload = self.server.service.handle(method, self.path, body)  # type: ignore[attr-defined]
        data = json.dumps(payload).encode()
        self.send_response(int(status))
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self) -> None:
        self._respond("GET")

    def do_POST(self) -> None:
        self._respond("POST")

    def log_message(self, format: str, *args: Any) -> None:
        log.debug("%s - %s", self.address_string(), format % args)


class RunningService:
    """A started HTTP server plus its periodic snapshot thread."""

    def __init__(self, service: GridService, httpd: ThreadingHTTPServer):
        self.service = service
        self.httpd = httpd
        self._stop = threading.Event()
        self._threads = [
            threading.Thread(target=httpd.serve_forever, name="gridmon-http", daemon=True),
            threading.Thread(target=self._snapshot_loop, name="gridmon-snapshot", daemon=True),
        ]
        for t in self._threads:
            t.start()

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def _snapshot_loop(self) -> None:
        while not self._stop.wait(self.service.config.snapshot_interval):
            try:
                self.service.snapshot()
            except GridMonError:
                log.exception("periodic snapshot failed")

    def wait(self) -> None:
        self._threads[0].join()

    def shutdown(self, final_snapshot: bool = True) -> None:
        self._stop.set()
        self.httpd.shutdown()
        self.httpd.server_close()
        if final_snapshot:
            self.service.snapshot()


def serve(config: ServiceConfig) -> RunningService:
    """Load state and start serving in background threads.

    Raises:
        CorruptSnapshot: a persisted file violates the registry invariants.
        BindFailure: the listen address cannot be bound.
    """
    config.check()
    service = GridService.from_config(config)
    try:
        httpd = ThreadingHTTPServer((config.host, config.port), _Handler)
    except OSError as exc:
        raise BindFailure(f"cannot bind {config.host}:{config.port}: {exc}") from exc
    httpd.service = service  # type: ignore[attr-defined]
    log.info("serving on %s:%s", *httpd.server_address[:2])
    return RunningService(service, httpd)
