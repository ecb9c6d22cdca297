"""Entity/domain partition and theodolite designations.

The registry is the in-memory form of two relational tables:

* ``domain``: one ``(entity, domain)`` row per edge entity, where each row
  also carries the entity kind;
* ``theodolite``: one ``(domain_a, domain_b, theodolite_a, theodolite_b)``
  row per ordered pair of distinct domains.

Mutations are serialized behind a lock. Stored records are frozen, so a
reader never observes a half-built designation.
"""

from __future__ import annotations

import enum
import threading
import weakref
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator

from gridmon.errors import (
    AlreadyDesignated,
    DesignationInUse,
    DuplicateEntity,
    EntityInUse,
    InvalidId,
    NotATheodolite,
    SelfPair,
    UnknownDesignation,
    UnknownEntity,
    WrongDomain,
)

if TYPE_CHECKING:
    from gridmon.metrics import MetricStore


class EntityKind(str, enum.Enum):
    COMPUTING = "Computing"
    STORAGE = "Storage"
    THEODOLITE = "Theodolite"

    @classmethod
    def parse(cls, value: str | EntityKind) -> EntityKind:
        """Accept a kind object, its value, or a case-insensitive name."""
        if isinstance(value, EntityKind):
            return value
        for kind in cls:
            if value.lower() in (kind.value.lower(), kind.name.lower()):
                return kind
        raise ValueError(f"unknown entity kind {value!r}")


def check_id(value: object, what: str = "identifier") -> str:
    """Return ``value`` if it is a usable identifier, else raise InvalidId."""
    if not isinstance(value, str) or not value:
        raise InvalidId(f"{what} must be a non-empty string, got {value!r}")
    if any(ch.isspace() for ch in value):
        raise InvalidId(f"{what} {value!r} contains whitespace")
    return value


@dataclass(frozen=True)
class EdgeEntity:
    id: str
    kind: EntityKind
    domain: str

    @property
    def is_theodolite(self) -> bool:
        return self.kind is EntityKind.THEODOLITE


@dataclass(frozen=True, order=True)
class TheodoliteDesignation:
    """Binds one ordered domain pair to the theodolite pair measuring it."""

    domain_a: str
    domain_b: str
    theodolite_a: str
    theodolite_b: str

    @property
    def domains(self) -> tuple[str, str]:
        return (self.domain_a, self.domain_b)

    @property
    def theodolites(self) -> tuple[str, str]:
        return (self.theodolite_a, self.theodolite_b)


@dataclass(frozen=True)
class DesignationLookup:
    """Result of :meth:`Registry.lookup_designation`.

    ``reversed`` is true when no designation exists for the requested
    orientation and the one for the opposite orientation was returned.
    """

    designation: TheodoliteDesignation
    reversed: bool = False


class Registry:
    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._entities: dict[str, EdgeEntity] = {}
        self._members: dict[str, set[str]] = {}
        self._designations: dict[tuple[str, str], TheodoliteDesignation] = {}
        # theodolite pair -> number of designations using it
        self._pairs: dict[tuple[str, str], int] = {}
        self._stores: weakref.WeakSet[MetricStore] = weakref.WeakSet()

    # -- entities ---------------------------------------------------------

    def register_entity(
        self, id: str, kind: EntityKind | str, domain: str
    ) -> EdgeEntity:
        """Add an edge entity to ``domain``, creating the domain if needed.

        Raises:
            InvalidId: ``id`` or ``domain`` is empty or contains whitespace.
            DuplicateEntity: ``id`` is already registered, in any domain.
        """
        check_id(id, "entity id")
        check_id(domain, "domain id")
        entity = EdgeEntity(id, EntityKind.parse(kind), domain)
        with self._lock:
            if id in self._entities:
                prev = self._entities[id]
                raise DuplicateEntity(
                    f"entity {id!r} already registered in domain {prev.domain!r}"
                )
            self._members.setdefault(domain, set()).add(id)
            self._entities[id] = entity
        return entity

    def remove_entity(self, id: str) -> EdgeEntity:
        with self._lock:
            entity = self.entity(id)
            for d in self._designations.values():
                if id in d.theodolites:
                    raise EntityInUse(
                        f"entity {id!r} is referenced by designation "
                        f"{d.domain_a}->{d.domain_b}"
                    )
            del self._entities[id]
            members = self._members[entity.domain]
            members.discard(id)
            if not members:
                del self._members[entity.domain]
        return entity

    def entity(self, id: str) -> EdgeEntity:
        try:
            return self._entities[id]
        except KeyError:
            raise UnknownEntity(f"unknown entity {id!r}") from None

    def domain_of(self, entity: str) -> str:
        return self.entity(entity).domain

    def has_entity(self, id: str) -> bool:
        return id in self._entities

    def entities(self, kind: EntityKind | str | None = None) -> list[EdgeEntity]:
        """All entities sorted by id, optionally restricted to one kind."""
        with self._lock:
            items = list(self._entities.values())
        if kind is not None:
            kind = EntityKind.parse(kind)
            items = [e for e in items if e.kind is kind]
        return sorted(items, key=lambda e: e.id)

    def domains(self) -> list[str]:
        with self._lock:
            return sorted(self._members)

    def members(self, domain: str) -> list[EdgeEntity]:
        with self._lock:
            ids = sorted(self._members.get(domain, ()))
            return [self._entities[i] for i in ids]

    # -- designations -----------------------------------------------------

    def designate_theodolites(
        self, domain_a: str, domain_b: str, t_a: str, t_b: str
    ) -> TheodoliteDesignation:
        """Make ``(t_a, t_b)`` the measurement reference for ``domain_a -> domain_b``.

        A theodolite may take part in any number of designations.

        Raises:
            SelfPair: the two domains are equal.
            UnknownEntity: either theodolite is not registered.
            NotATheodolite: either entity is not of kind Theodolite.
            WrongDomain: a theodolite does not belong to its stated domain.
            AlreadyDesignated: the ordered domain pair already has one.
        """
        if domain_a == domain_b:
            raise SelfPair(f"cannot designate a domain with itself ({domain_a!r})")
        with self._lock:
            for tid, dom in ((t_a, domain_a), (t_b, domain_b)):
                ent = self.entity(tid)
                if not ent.is_theodolite:
                    raise NotATheodolite(f"entity {tid!r} is a {ent.kind.value} entity")
                if ent.domain != dom:
                    raise WrongDomain(
                        f"theodolite {tid!r} belongs to {ent.domain!r}, not {dom!r}"
                    )
            key = (domain_a, domain_b)
            if key in self._designations:
                d = self._designations[key]
                raise AlreadyDesignated(
                    f"{domain_a}->{domain_b} already designated to "
                    f"({d.theodolite_a}, {d.theodolite_b})"
                )
            designation = TheodoliteDesignation(domain_a, domain_b, t_a, t_b)
            self._designations[key] = designation
            self._pairs[designation.theodolites] = self._pairs.get(
                designation.theodolites, 0
            ) + 1
        return designation

    def attach_store(self, store: MetricStore) -> None:
        """Let ``store`` veto removal of designations it holds data for."""
        self._stores.add(store)

    def remove_designation(
        self, domain_a: str, domain_b: str, *, cascade: bool = False
    ) -> TheodoliteDesignation:
        """Drop a designation.

        If an attached store holds measurements for the designated theodolite
        pair, the removal is refused unless ``cascade`` is set, in which case
        those measurements are purged.
        """
        with self._lock:
            key = (domain_a, domain_b)
            if key not in self._designations:
                raise UnknownDesignation(f"no designation for {domain_a}->{domain_b}")
            d = self._designations[key]
            orphaned = self._pairs[d.theodolites] == 1
            users = [st for st in self._stores if st.has_measurements_for(*d.theodolites)]
            if orphaned and users:
                if not cascade:
                    raise DesignationInUse(
                        f"designation {domain_a}->{domain_b} has stored measurements"
                    )
                for st in users:
                    st.purge_pair(*d.theodolites)
            del self._designations[key]
            if orphaned:
                del self._pairs[d.theodolites]
            else:
                self._pairs[d.theodolites] -= 1
        return d

    def lookup_designation(
        self, domain_a: str, domain_b: str
    ) -> DesignationLookup | None:
        d = self._designations.get((domain_a, domain_b))
        if d is not None:
            return DesignationLookup(d, reversed=False)
        d = self._designations.get((domain_b, domain_a))
        if d is not None:
            return DesignationLookup(d, reversed=True)
        return None

    def designations(self) -> list[TheodoliteDesignation]:
        with self._lock:
            return sorted(self._designations.values())

    def is_designated_pair(self, t_a: str, t_b: str) -> bool:
        """True if some designation has exactly ``(t_a, t_b)`` as its theodolites."""
        return (t_a, t_b) in self._pairs

    def partner_theodolites(self, theodolite: str) -> list[str]:
        """Every TheodoliteB designated opposite ``theodolite`` as TheodoliteA."""
        ent = self.entity(theodolite)
        if not ent.is_theodolite:
            raise NotATheodolite(f"entity {theodolite!r} is a {ent.kind.value} entity")
        with self._lock:
            partners = {d.theodolite_b for d in self._designations.values()
                        if d.theodolite_a == theodolite}
        return sorted(partners)

    # -- bulk -------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._entities)

    def __iter__(self) -> Iterator[EdgeEntity]:
        return iter(self.entities())

    def load(
        self,
        entities: Iterable[EdgeEntity],
        designations: Iterable[TheodoliteDesignation] = (),
    ) -> None:
        """Register entities then designations, with all the usual checks."""
        for e in entities:
            self.register_entity(e.id, e.kind, e.domain)
        for d in designations:
            self.designate_theodolites(*d.domains, *d.theodolites)

    def check_invariants(self) -> None:
        """Full-scan consistency check; raises AssertionError on violation."""
        with self._lock:
            for eid, e in self._entities.items():
                assert e.id == eid
                assert eid in self._members[e.domain]
            assert sum(len(m) for m in self._members.values()) == len(self._entities)
            pairs: dict[tuple[str, str], int] = {}
            for key, d in self._designations.items():
                assert key == d.domains and d.domain_a != d.domain_b
                for tid, dom in ((d.theodolite_a, d.domain_a), (d.theodolite_b, d.domain_b)):
                    ent = self._entities[tid]
                    assert ent.is_theodolite and ent.domain == dom
                pairs[d.theodolites] = pairs.get(d.theodolites, 0) + 1
            assert pairs == self._pairs
