"""Entity-level connectivity queries.

Consumers ask about Computing/Storage entities, never about theodolites.
Each query resolves the entities' domains, finds the theodolite pair
designated for that domain pair, and reads the latest measurement on it.
Connectivity is only defined between distinct domains.
"""

from __future__ import annotations

from dataclasses import dataclass

from gridmon.errors import SameDomain
from gridmon.metrics import ConnectivityValue, MetricStore
from gridmon.registry import EntityKind, Registry, TheodoliteDesignation


@dataclass(frozen=True)
class EntityMetricResult:
    entity: str
    value: ConnectivityValue
    via: TheodoliteDesignation
    reversed: bool = False

    def to_record(self) -> dict:
        return {
            "entity": self.entity,
            "metric": self.value.metric.name,
            "value": self.value.value,
            "via": {
                "domain_a": self.via.domain_a,
                "domain_b": self.via.domain_b,
                "theodolite_a": self.via.theodolite_a,
                "theodolite_b": self.via.theodolite_b,
            },
            "reversed": self.reversed,
        }


class QueryEngine:
    def __init__(self, registry: Registry, store: MetricStore):
        self.registry = registry
        self.store = store

    def _between_domains(
        self, metric: str, domain_from: str, domain_to: str, entity: str
    ) -> EntityMetricResult | None:
        found = self.registry.lookup_designation(domain_from, domain_to)
        if found is None:
            return None
        d = found.designation
        value = self.store.latest(metric, d.theodolite_a, d.theodolite_b)
        if value is None:
            return None
        return EntityMetricResult(entity, value, d, found.reversed)

    def metric_between(
        self, metric: str, from_entity: str, to_entity: str
    ) -> EntityMetricResult | None:
        """Latest ``metric`` value between two entities in different domains.

        Returns None when the domain pair has no designation (in either
        orientation) or the designated pair has never been measured.

        Raises:
            UnknownEntity, UnknownMetric, SameDomain
        """
        self.store.metric(metric)
        dc = self.registry.domain_of(from_entity)
        ds = self.registry.domain_of(to_entity)
        if dc == ds:
            raise SameDomain(f"{from_entity!r} and {to_entity!r} are both in {dc!r}")
        return self._between_domains(metric, dc, ds, to_entity)

    def metric_to_kind(
        self, metric: str, from_entity: str, kind: EntityKind | str
    ) -> list[EntityMetricResult]:
        """One result per entity of ``kind`` outside the caller's domain that
        has a measured designation, sorted by entity id."""
        self.store.metric(metric)
        dc = self.registry.domain_of(from_entity)
        # all members of a domain share one designation, so resolve per domain
        per_domain: dict[str, EntityMetricResult | None] = {}
        results = []
        for ent in self.registry.entities(kind):
            if ent.domain == dc:
                continue
            if ent.domain not in per_domain:
                per_domain[ent.domain] = self._between_domains(metric, dc, ent.domain, ent.id)
            r = per_domain[ent.domain]
            if r is not None:
                results.append(EntityMetricResult(ent.id, r.value, r.via, r.reversed))
        return results

    def best_partner(
        self, metric: str, from_entity: str, kind: EntityKind | str
    ) -> EntityMetricResult | None:
        """The best-valued entity from :meth:`metric_to_kind`; ties go to the
        smallest id."""
        candidates = self.metric_to_kind(metric, from_entity, kind)
        if not candidates:
            return None
        definition = self.store.metric(metric)
        return min(candidates, key=lambda r: (definition.sort_key(r.value.value), r.entity))

    def partner_theodolites(self, theodolite: str) -> list[str]:
        return self.registry.partner_theodolites(theodolite)
