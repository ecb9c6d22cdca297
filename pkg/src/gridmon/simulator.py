"""Synthetic grids with known ground truth.

Each generated domain is a star: every edge entity hangs off the domain
gateway through a link with its own cost, and gateways are joined pairwise
by inter-domain links. The true cost between two entities in different
domains is additive::

    cost(e, f) = link(e) + inter(dom(e), dom(f)) + link(f)

Theodolite probes measure the same formula between the designated
theodolites, optionally with multiplicative noise. Comparing the two tells
how well theodolite values stand in for the entities they represent.

Topology regimes
----------------
``"compliant"``
    cost ranges are chosen so that every generated domain passes
    :func:`gridmon.validator.validate_domain` at the default thresholds.
``"violating"``
    internal link costs are drawn from the *external* cost range, so every
    domain fails the negligibility test at the default threshold.
``"any"``
    no constraint on the ranges (zero internal costs are allowed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

from gridmon.errors import IncompleteMesh, InvalidSpec
from gridmon.metrics import ConnectivityValue, Measurement, MetricDefinition, MetricStore, Polarity
from gridmon.registry import EdgeEntity, EntityKind, Registry, TheodoliteDesignation
from gridmon.validator import DEFAULT_EPSILON, DEFAULT_RHO, IntraDomainView

Regime = Literal["compliant", "violating", "any"]

DELAY = MetricDefinition("Delay", Polarity.LOWER_IS_BETTER, "ms")


@dataclass(frozen=True)
class TopologySpec:
    num_domains: int
    computing: int = 2
    storage: int = 2
    theodolites: int = 1
    internal_cost_range: tuple[float, float] = (1.0, 1.4)
    external_cost_range: tuple[float, float] = (30.0, 100.0)
    noise_fraction: float = 0.0
    seed: int = 0
    regime: Regime = "compliant"

    @property
    def entities_per_domain(self) -> int:
        return self.computing + self.storage + self.theodolites

    def check(self) -> None:
        """Raise InvalidSpec unless the spec can be generated."""
        if self.num_domains < 1:
            raise InvalidSpec("num_domains must be >= 1")
        if min(self.computing, self.storage) < 0:
            raise InvalidSpec("entity counts must be non-negative")
        if self.theodolites < 1:
            raise InvalidSpec("every domain needs at least one theodolite")
        if self.computing + self.storage < 1:
            raise InvalidSpec("every domain needs a Computing or Storage entity")
        if not 0 <= self.noise_fraction < 1:
            raise InvalidSpec("noise_fraction must be in [0, 1)")
        ilo, ihi = self.internal_cost_range
        elo, ehi = self.external_cost_range
        if not 0 <= ilo <= ihi or not np.isfinite(ihi):
            raise InvalidSpec(f"bad internal_cost_range {self.internal_cost_range}")
        if not 0 < elo <= ehi or not np.isfinite(ehi):
            raise InvalidSpec(f"bad external_cost_range {self.external_cost_range}")
        if self.regime == "compliant":
            # worst internal path is entity->gateway->theodolite, at most 2*ihi;
            # cheapest internal is one link, at least ilo; cheapest external
            # is theodolite link plus an inter-domain link, at least ilo+elo
            if not ihi < elo:
                raise InvalidSpec("compliant regime needs external costs above internal")
            if ilo <= 0 or 2 * ihi > DEFAULT_RHO * ilo:
                raise InvalidSpec(
                    f"compliant regime needs 2*max internal <= {DEFAULT_RHO:g}*min internal")
            if 2 * ihi > DEFAULT_EPSILON * (ilo + elo):
                raise InvalidSpec(
                    f"compliant regime needs 2*max internal <= {DEFAULT_EPSILON:g}"
                    "*(min internal + min external)")
        elif self.regime == "violating":
            # internal drawn from [elo, ehi]: worst internal >= 2*elo and
            # cheapest external <= 2*ehi, so the ratio is >= elo/ehi
            if not elo / ehi > DEFAULT_EPSILON:
                raise InvalidSpec(
                    f"violating regime needs min/max external cost > {DEFAULT_EPSILON:g}")
        elif self.regime != "any":
            raise InvalidSpec(f"unknown regime {self.regime!r}")


@dataclass
class RegistryFixture:
    entities: list[EdgeEntity]
    designations: list[TheodoliteDesignation]

    def to_registry(self) -> Registry:
        registry = Registry()
        registry.load(self.entities, self.designations)
        return registry


@dataclass
class GroundTruth:
    """Hidden link costs of a generated grid.

    ``link`` maps each entity to the cost of its link to the domain gateway;
    ``inter`` maps each unordered domain pair (sorted) to the gateway-to-
    gateway cost.
    """

    entities: dict[str, EdgeEntity]
    link: dict[str, float]
    inter: dict[tuple[str, str], float]
    designations: list[TheodoliteDesignation] = field(default_factory=list)

    def inter_cost(self, da: str, db: str) -> float:
        return self.inter[(da, db) if da < db else (db, da)]

    def pair_cost(self, a: str, b: str) -> float:
        da, db = self.entities[a].domain, self.entities[b].domain
        if da == db:
            raise ValueError(f"{a} and {b} share domain {da}")
        return self.link[a] + self.inter_cost(da, db) + self.link[b]

    def domains(self) -> list[str]:
        return sorted({e.domain for e in self.entities.values()})

    def domain_view(self, domain: str, metric: MetricDefinition = DELAY) -> IntraDomainView:
        """Intra-domain view for the validator.

        Internal paths are every Computing/Storage entity to the gateway and
        to each local theodolite; external paths run from each local
        theodolite to every other domain's gateway.
        """
        members = [e for e in self.entities.values() if e.domain == domain]
        gateway = f"gw:{domain}"
        cs = sorted(e.id for e in members if not e.is_theodolite)
        ts = sorted(e.id for e in members if e.is_theodolite)
        internal = [(e, gateway, self.link[e]) for e in cs]
        internal += [(e, t, self.link[e] + self.link[t]) for e in cs for t in ts]
        external = [(t, f"gw:{other}", self.link[t] + self.inter_cost(domain, other))
                    for t in ts for other in self.domains() if other != domain]
        return IntraDomainView.build(domain, metric, internal, external)


def _domain_ids(n: int) -> list[str]:
    width = len(str(n))
    return [f"D{i:0{width}d}" for i in range(1, n + 1)]


def generate(spec: TopologySpec) -> tuple[RegistryFixture, GroundTruth]:
    """Build a grid from ``spec``; identical specs give identical output.

    Entity ids are ``<K><domain number>.<index>`` with K in {C, S, T}, so the
    usual first-letter convention still identifies the kind.
    """
    spec.check()
    rng = np.random.default_rng(spec.seed)
    domains = _domain_ids(spec.num_domains)
    width = len(str(spec.num_domains))

    entities: list[EdgeEntity] = []
    for i, dom in enumerate(domains, 1):
        for prefix, kind, count in (("C", EntityKind.COMPUTING, spec.computing),
                                    ("S", EntityKind.STORAGE, spec.storage),
                                    ("T", EntityKind.THEODOLITE, spec.theodolites)):
            entities += [EdgeEntity(f"{prefix}{i:0{width}d}.{j}", kind, dom)
                         for j in range(1, count + 1)]

    # draw unit variates first so cost ranges only rescale the same sample
    u_link = rng.random(len(entities))
    pairs = [(a, b) for i, a in enumerate(domains) for b in domains[i + 1:]]
    u_inter = rng.random(len(pairs))
    ilo, ihi = spec.internal_cost_range
    elo, ehi = spec.external_cost_range
    if spec.regime == "violating":
        ilo, ihi = elo, ehi
    link = {e.id: float(ilo + (ihi - ilo) * u) for e, u in zip(entities, u_link)}
    inter = {p: float(elo + (ehi - elo) * u) for p, u in zip(pairs, u_inter)}

    theos: dict[str, list[str]] = {d: [] for d in domains}
    for e in entities:
        if e.is_theodolite:
            theos[e.domain].append(e.id)
    designations = []
    for a in domains:
        for b in domains:
            if a != b:
                ta = theos[a][rng.integers(len(theos[a]))]
                tb = theos[b][rng.integers(len(theos[b]))]
                designations.append(TheodoliteDesignation(a, b, ta, tb))

    truth = GroundTruth({e.id: e for e in entities}, link, inter, designations)
    return RegistryFixture(entities, designations), truth


def probe_all(
    truth: GroundTruth,
    noise_fraction: float = 0.0,
    *,
    metric: str = DELAY.name,
    seed: int | None = 0,
    start: float = 0.0,
    step: float = 1.0,
) -> Iterator[Measurement]:
    """One probe round: a measurement per designated theodolite pair.

    Each value is the true pair cost times ``1 + u`` with ``u`` uniform on
    ``[-noise_fraction, noise_fraction]``. Timestamps start at ``start`` and
    increase by ``step``.
    """
    if not 0 <= noise_fraction < 1:
        raise ValueError("noise_fraction must be in [0, 1)")
    rng = np.random.default_rng(seed)
    ts = start
    for d in truth.designations:
        cost = truth.pair_cost(d.theodolite_a, d.theodolite_b)
        if noise_fraction:
            cost *= 1.0 + rng.uniform(-noise_fraction, noise_fraction)
        yield Measurement(metric, d.theodolite_a, d.theodolite_b, cost, ts)
        ts += step


@dataclass(frozen=True)
class RepresentativenessReport:
    worst: float
    mean: float
    pairs: int
    worst_pair: tuple[str, str] | None

    def to_json(self) -> dict:
        return {"worst": self.worst, "mean": self.mean, "pairs": self.pairs,
                "worst_pair": list(self.worst_pair) if self.worst_pair else None}


def representativeness_error(
    truth: GroundTruth, registry: Registry, store: MetricStore, metric: str = DELAY.name
) -> RepresentativenessReport:
    """Relative error of theodolite values against true entity-pair costs.

    Covers every ordered pair of Computing/Storage entities in different
    domains. The stored value for a pair is what a consumer would obtain,
    i.e. the latest measurement on the designation for the domain pair
    (reverse orientation allowed).

    Raises:
        IncompleteMesh: some entity pair has no designation or no measurement.
    """
    store.metric(metric)
    domains = registry.domains()
    by_domain = {d: [e.id for e in registry.members(d) if not e.is_theodolite]
                 for d in domains}
    costs = {d: np.array([truth.link[e] for e in by_domain[d]]) for d in domains}

    worst, total, count, worst_pair = 0.0, 0.0, 0, None
    for da in domains:
        for db in domains:
            if da == db or not by_domain[da] or not by_domain[db]:
                continue
            found = registry.lookup_designation(da, db)
            if found is None:
                raise IncompleteMesh(f"no designation for {da}->{db}")
            d = found.designation
            value: ConnectivityValue | None = store.latest(metric, *d.theodolites)
            if value is None:
                raise IncompleteMesh(f"no {metric} measurement on {d.theodolites}")
            true = costs[da][:, None] + truth.inter_cost(da, db) + costs[db][None, :]
            err = np.abs(value.value - true) / true
            total += float(err.sum())
            count += err.size
            k = int(np.argmax(err))
            if err.flat[k] > worst or worst_pair is None:
                i, j = divmod(k, err.shape[1])
                worst = float(err.flat[k])
                worst_pair = (by_domain[da][i], by_domain[db][j])
    if count == 0:
        return RepresentativenessReport(0.0, 0.0, 0, None)
    return RepresentativenessReport(worst, total / count, count, worst_pair)


def build(
    spec: TopologySpec, *, rounds: int = 1
) -> tuple[Registry, MetricStore, GroundTruth]:
    """Generate, load and probe in one go; handy for experiments."""
    fixture, truth = generate(spec)
    registry = fixture.to_registry()
    store = MetricStore(registry)
    store.define_metric(DELAY.name, DELAY.polarity, DELAY.unit)
    n = len(truth.designations)
    for r in range(rounds):
        store.ingest_many(probe_all(truth, spec.noise_fraction, seed=spec.seed + r,
                                    start=float(r * n)))
    return registry, store, truth
