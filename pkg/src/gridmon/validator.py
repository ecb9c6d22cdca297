"""Domain representativeness checks and mesh accounting.

Theodolite measurements stand in for entity-to-entity connectivity only when
two properties hold inside a domain:

comparability
    every internal path (entity to gateway, entity to theodolite) costs about
    the same, measured as ``max(internal) / min(internal) <= rho``;
negligibility
    internal paths are cheap next to the paths from the theodolites to the
    outside, measured as ``max(internal) / min(external) <= epsilon``.

Both tests work in cost space. LowerIsBetter values are costs already;
HigherIsBetter values are inverted first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal

from gridmon.errors import EmptyView, InvalidCost, MixedMetrics, ZeroCost
from gridmon.metrics import ConnectivityValue, MetricDefinition, MetricStore, Polarity
from gridmon.registry import Registry

DEFAULT_RHO = 3.0
DEFAULT_EPSILON = 0.1

GapReason = Literal["NoDesignation", "NoMeasurement"]


@dataclass(frozen=True)
class InternalPath:
    a: str
    b: str
    value: ConnectivityValue

    @property
    def label(self) -> str:
        return f"{self.a}<->{self.b}"


@dataclass(frozen=True)
class ExternalPath:
    theodolite: str
    outside: str
    value: ConnectivityValue

    @property
    def label(self) -> str:
        return f"{self.theodolite}->{self.outside}"


@dataclass(frozen=True)
class IntraDomainView:
    domain: str
    internal_paths: tuple[InternalPath, ...]
    external_paths: tuple[ExternalPath, ...]

    @classmethod
    def build(
        cls,
        domain: str,
        metric: MetricDefinition,
        internal: Iterable[tuple[str, str, float]],
        external: Iterable[tuple[str, str, float]],
    ) -> IntraDomainView:
        """Convenience constructor from plain ``(a, b, value)`` triples."""
        return cls(
            domain,
            tuple(InternalPath(a, b, ConnectivityValue(metric, float(v))) for a, b, v in internal),
            tuple(ExternalPath(t, o, ConnectivityValue(metric, float(v))) for t, o, v in external),
        )

    @classmethod
    def from_json(cls, doc: dict) -> IntraDomainView:
        """Parse the view document.

        ``metric`` names the default metric and ``polarity`` its polarity;
        a path may override ``metric`` to support mixed-metric detection.
        """
        polarity = Polarity.parse(doc.get("polarity", Polarity.LOWER_IS_BETTER))
        default = doc.get("metric", "cost")
        metrics: dict[str, MetricDefinition] = {}

        def value(p: dict) -> ConnectivityValue:
            name = p.get("metric", default)
            m = metrics.setdefault(name, MetricDefinition(name, polarity, doc.get("unit")))
            return ConnectivityValue(m, float(p["value"]))

        return cls(
            str(doc["domain"]),
            tuple(InternalPath(str(p["a"]), str(p["b"]), value(p))
                  for p in doc.get("internal_paths", ())),
            tuple(ExternalPath(str(p["theodolite"]), str(p["outside"]), value(p))
                  for p in doc.get("external_paths", ())),
        )

    def to_json(self) -> dict:
        metric = (self.internal_paths + self.external_paths)[0].value.metric \
            if (self.internal_paths or self.external_paths) else None
        doc: dict = {"domain": self.domain}
        if metric is not None:
            doc.update(metric=metric.name, polarity=metric.polarity.value, unit=metric.unit)
        doc["internal_paths"] = [
            {"a": p.a, "b": p.b, "value": p.value.value, "metric": p.value.metric.name}
            for p in self.internal_paths]
        doc["external_paths"] = [
            {"theodolite": p.theodolite, "outside": p.outside, "value": p.value.value,
             "metric": p.value.metric.name}
            for p in self.external_paths]
        return doc


@dataclass
class ValidationReport:
    domain: str
    comparability_ratio: float
    negligibility_ratio: float
    rho: float
    epsilon: float
    passes: bool
    violations: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "domain": self.domain,
            "comparability_ratio": self.comparability_ratio,
            "negligibility_ratio": self.negligibility_ratio,
            "rho": self.rho,
            "epsilon": self.epsilon,
            "passes": self.passes,
            "violations": list(self.violations),
        }

    def table(self) -> str:
        verdict = "PASS" if self.passes else "FAIL"
        rows = [
            f"domain         {self.domain}",
            f"comparability  {self.comparability_ratio:.4g}  (rho = {self.rho:g})",
            f"negligibility  {self.negligibility_ratio:.4g}  (epsilon = {self.epsilon:g})",
            f"verdict        {verdict}",
        ]
        rows += [f"  - {v}" for v in self.violations]
        return "\n".join(rows)


def to_cost(value: ConnectivityValue) -> float:
    v = value.value
    if not math.isfinite(v) or v < 0:
        raise InvalidCost(f"{value.metric.name} value {v} is not a non-negative finite number")
    if value.metric.lower_is_better:
        return v
    if v == 0:
        raise ZeroCost(f"{value.metric.name} value 0 has no reciprocal cost")
    return 1.0 / v


def validate_domain(
    view: IntraDomainView, rho: float = DEFAULT_RHO, epsilon: float = DEFAULT_EPSILON
) -> ValidationReport:
    """Check comparability and negligibility for one domain.

    Each internal path costing more than ``rho`` times the cheapest internal
    path, and each internal path costing more than ``epsilon`` times the
    cheapest external path, is reported as a violation.

    Raises:
        EmptyView: no internal or no external paths.
        MixedMetrics: paths carry values of more than one metric.
        ZeroCost: the cheapest external path costs zero.
    """
    if not rho > 1:
        raise ValueError(f"rho must be > 1, got {rho}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if not view.internal_paths or not view.external_paths:
        raise EmptyView(f"view of {view.domain!r} needs internal and external paths")
    names = {p.value.metric.name for p in (*view.internal_paths, *view.external_paths)}
    if len(names) > 1:
        raise MixedMetrics(f"view of {view.domain!r} mixes metrics {sorted(names)}")

    internal = [(p, to_cost(p.value)) for p in view.internal_paths]
    external = [(p, to_cost(p.value)) for p in view.external_paths]
    worst_in = max(c for _, c in internal)
    best_in = min(c for _, c in internal)
    best_ext_path, best_ext = min(external, key=lambda pc: pc[1])
    if best_ext == 0:
        raise ZeroCost(f"external path {best_ext_path.label} has zero cost")

    if worst_in == 0:
        comparability = 1.0
    elif best_in == 0:
        comparability = math.inf
    else:
        comparability = worst_in / best_in
    negligibility = worst_in / best_ext

    violations = []
    if comparability > rho:
        for p, c in internal:
            if (c > 0 if best_in == 0 else c / best_in > rho):
                violations.append(
                    f"comparability: internal path {p.label} cost {c:g} exceeds "
                    f"{rho:g} x cheapest internal cost {best_in:g}")
    if negligibility > epsilon:
        for p, c in internal:
            if c / best_ext > epsilon:
                violations.append(
                    f"negligibility: internal path {p.label} cost {c:g} exceeds "
                    f"{epsilon:g} x cheapest external cost {best_ext:g} "
                    f"({best_ext_path.label})")
    return ValidationReport(
        view.domain, comparability, negligibility, rho, epsilon,
        passes=comparability <= rho and negligibility <= epsilon,
        violations=violations,
    )


def mesh_cost(num_domains: int, directed: bool = False) -> int:
    """Number of communications a full mesh over ``num_domains`` must measure."""
    if num_domains < 1:
        raise ValueError("num_domains must be >= 1")
    pairs = num_domains * (num_domains - 1)
    return pairs if directed else pairs // 2


@dataclass(frozen=True, order=True)
class CoverageGap:
    domain_a: str
    domain_b: str
    reason: GapReason

    def to_json(self) -> dict:
        return {"domain_a": self.domain_a, "domain_b": self.domain_b, "reason": self.reason}


def coverage_gaps(
    registry: Registry, store: MetricStore | None = None, metric: str | None = None
) -> list[CoverageGap]:
    """Unordered domain pairs whose connectivity nobody is measuring.

    A pair is covered when a designation exists in either orientation and at
    least one of those designations has measurements (of ``metric``, when
    given). Without a ``store`` only designations are checked. Pairs are
    reported with the smaller domain id first.
    """
    if store is not None and metric is not None:
        store.metric(metric)
    domains = registry.domains()
    gaps = []
    for i, a in enumerate(domains):
        for b in domains[i + 1:]:
            found = [registry.lookup_designation(x, y) for x, y in ((a, b), (b, a))]
            designated = [f.designation for f in found if f is not None]
            # lookup falls back to the reverse orientation; keep unique ones
            designated = list(dict.fromkeys(designated))
            if not designated:
                gaps.append(CoverageGap(a, b, "NoDesignation"))
            elif store is not None and not any(
                store.has_measurements_for(*d.theodolites, metric=metric) for d in designated
            ):
                gaps.append(CoverageGap(a, b, "NoMeasurement"))
    return sorted(gaps)
