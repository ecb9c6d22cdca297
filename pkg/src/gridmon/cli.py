"""Command-line interface.

Most commands work directly on the snapshot files: they load the registry
snapshot and measurement log, apply the command, and save again if state
changed. ``serve`` starts the HTTP service over the same files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import urllib.request
from pathlib import Path

from gridmon import persistence, simulator
from gridmon.errors import GridMonError
from gridmon.metrics import parse_lines
from gridmon.query import QueryEngine
from gridmon.service import ServiceConfig, serve
from gridmon.validator import IntraDomainView, coverage_gaps, validate_domain


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _config(args: argparse.Namespace) -> ServiceConfig:
    config = ServiceConfig.load(args.config)
    if args.snapshot:
        config.snapshot_path = args.snapshot
    if args.log:
        config.log_path = args.log
    config.check()
    return config


def _state(config: ServiceConfig):
    return persistence.load(config.snapshot_path, config.log_path)


def cmd_serve(args, config):
    if args.host:
        config.host = args.host
    if args.port is not None:
        config.port = args.port
    running = serve(config)
    print(f"gridmon serving on {running.url}", file=sys.stderr)
    try:
        running.wait()
    except KeyboardInterrupt:
        pass
    finally:
        running.shutdown()


def cmd_metric(args, config):
    registry, store = _state(config)
    m = store.define_metric(args.name, args.polarity, args.unit,
                            tuple(args.range) if args.range else None)
    persistence.save(registry, store, config.snapshot_path)
    _emit(m.to_record())


def cmd_register(args, config):
    registry, store = _state(config)
    e = registry.register_entity(args.entity, args.kind, args.domain)
    persistence.save(registry, store, config.snapshot_path)
    _emit({"entity": e.id, "kind": e.kind.value, "domain": e.domain})


def cmd_designate(args, config):
    registry, store = _state(config)
    d = registry.designate_theodolites(args.domain_a, args.domain_b,
                                       args.theodolite_a, args.theodolite_b)
    persistence.save(registry, store, config.snapshot_path)
    _emit({"domain_a": d.domain_a, "domain_b": d.domain_b,
           "theodolite_a": d.theodolite_a, "theodolite_b": d.theodolite_b})


def cmd_ingest(args, config):
    registry, store = _state(config)
    text = sys.stdin.read() if args.file == "-" else Path(args.file).read_text()
    accepted = stale = 0
    for _, m in parse_lines(text):
        stale += store.ingest_measurement(m).stale
        accepted += 1
    persistence.save(registry, store, config.snapshot_path, config.log_path)
    _emit({"accepted": accepted, "stale": stale})


def cmd_query(args, config):
    registry, store = _state(config)
    q = QueryEngine(registry, store)
    if args.pattern == "between":
        r = q.metric_between(args.metric, args.source, args.target)
        _emit(r.to_record() if r else None)
    elif args.pattern == "to-kind":
        _emit([r.to_record() for r in q.metric_to_kind(args.metric, args.source, args.kind)])
    else:
        r = q.best_partner(args.metric, args.source, args.kind)
        _emit(r.to_record() if r else None)


def cmd_partners(args, config):
    registry, _ = _state(config)
    _emit(registry.partner_theodolites(args.theodolite))


def cmd_validate(args, config):
    doc = json.loads(Path(args.view).read_text())
    view = IntraDomainView.from_json(doc)
    rho = args.rho if args.rho is not None else config.rho
    epsilon = args.epsilon if args.epsilon is not None else config.epsilon
    report = validate_domain(view, rho, epsilon)
    if args.format == "table":
        print(report.table())
    else:
        _emit(report.to_json())
    return 0 if report.passes else 2


def cmd_coverage(args, config):
    registry, store = _state(config)
    _emit([g.to_json() for g in coverage_gaps(registry, store, args.metric)])


def cmd_simulate(args, config):
    spec = simulator.TopologySpec(
        num_domains=args.domains, computing=args.computing, storage=args.storage,
        theodolites=args.theodolites, internal_cost_range=tuple(args.internal),
        external_cost_range=tuple(args.external), noise_fraction=args.noise,
        seed=args.seed, regime=args.regime)
    registry, store, truth = simulator.build(spec, rounds=args.rounds)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    persistence.save(registry, store, out / "registry.jsonl", out / "measurements.jsonl")
    reports = [validate_domain(truth.domain_view(d), config.rho, config.epsilon)
               for d in truth.domains()] if spec.num_domains > 1 else []
    summary = {
        "spec": {k: getattr(spec, k) for k in spec.__dataclass_fields__},
        "entities": len(registry),
        "designations": len(registry.designations()),
        "measurements": len(store),
        "representativeness": simulator.representativeness_error(
            truth, registry, store).to_json(),
        "domains_passing": sum(r.passes for r in reports),
        "domains_failing": [r.domain for r in reports if not r.passes],
    }
    (out / "report.json").write_text(json.dumps(summary, indent=2) + "\n")
    _emit(summary)


def cmd_snapshot(args, config):
    if args.url:
        req = urllib.request.Request(args.url.rstrip("/") + "/snapshot", data=b"",
                                     method="POST")
        with urllib.request.urlopen(req) as resp:
            _emit(json.loads(resp.read()))
        return
    registry, store = _state(config)
    persistence.save(registry, store, config.snapshot_path, config.log_path)
    _emit({"entities": len(registry), "designations": len(registry.designations()),
           "measurements": len(store)})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridmon", description="Domain-based grid network monitoring registry.")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--snapshot", help="registry snapshot path")
    parser.add_argument("--log", help="measurement log path")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("metric", help="define a metric")
    p.add_argument("name")
    p.add_argument("polarity", help="HigherIsBetter or LowerIsBetter")
    p.add_argument("--unit")
    p.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"))
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("register", help="register an edge entity")
    p.add_argument("entity")
    p.add_argument("kind", help="Computing, Storage or Theodolite")
    p.add_argument("domain")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("designate", help="designate a theodolite pair for a domain pair")
    for name in ("domain_a", "domain_b", "theodolite_a", "theodolite_b"):
        p.add_argument(name)
    p.set_defaults(func=cmd_designate)

    p = sub.add_parser("ingest", help="ingest newline-delimited measurements")
    p.add_argument("file", nargs="?", default="-")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", help="connectivity queries")
    qsub = p.add_subparsers(dest="pattern", required=True)
    q = qsub.add_parser("between")
    q.add_argument("metric")
    q.add_argument("source")
    q.add_argument("target")
    for name in ("to-kind", "best"):
        q = qsub.add_parser(name)
        q.add_argument("metric")
        q.add_argument("source")
        q.add_argument("kind")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("partners", help="partner theodolites of a theodolite")
    p.add_argument("theodolite")
    p.set_defaults(func=cmd_partners)

    p = sub.add_parser("validate", help="validate an intra-domain view document")
    p.add_argument("view")
    p.add_argument("--rho", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("coverage", help="domain pairs lacking designation or data")
    p.add_argument("--metric")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("simulate", help="generate and probe a synthetic grid")
    p.add_argument("--domains", type=int, default=4)
    p.add_argument("--computing", type=int, default=2)
    p.add_argument("--storage", type=int, default=2)
    p.add_argument("--theodolites", type=int, default=1)
    p.add_argument("--internal", nargs=2, type=float, default=(1.0, 1.4), metavar=("LO", "HI"))
    p.add_argument("--external", nargs=2, type=float, default=(30.0, 100.0),
                   metavar=("LO", "HI"))
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--regime", choices=("compliant", "violating", "any"), default="compliant")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--out-dir", default="simulation")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("snapshot", help="rewrite snapshot files, or ask a server to")
    p.add_argument("--url", help="base URL of a running service")
    p.set_defaults(func=cmd_snapshot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        config = _config(args)
        return args.func(args, config) or 0
    except GridMonError as exc:
        print(f"error: {exc.name}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
