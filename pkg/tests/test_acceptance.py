"""Acceptance criteria, one test group per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import itertools
import math
import random
import tempfile
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from gridmon import (
    ConnectivityValue,
    EntityKind,
    MetricDefinition,
    MetricStore,
    Ordering,
    Polarity,
    QueryEngine,
    Registry,
    compare,
    mesh_cost,
    persistence,
    validate_domain,
)
from gridmon.errors import DuplicateEntity, GridMonError, SameDomain
from gridmon.simulator import TopologySpec, build, generate, representativeness_error

from oracles import Tables, random_grid, sql_best, sql_between, sql_partners, sql_to_kind

acceptance = pytest.mark.acceptance
MANY = settings(max_examples=1000, deadline=None,
                suppress_health_check=[HealthCheck.too_slow])


# -- 1 -----------------------------------------------------------------------

@acceptance(1, "SQL-oracle equivalence on 200 random fixtures, < 30 s")
def test_sql_oracle_equivalence():
    rng = random.Random(20240601)
    mismatches = 0
    calls = 0
    start = time.perf_counter()
    for _ in range(200):
        registry, store, tables = random_grid(rng, 10, 50, 100)
        assert len(registry.domains()) <= 10 and len(registry) <= 50 and len(store) <= 100
        q = QueryEngine(registry, store)
        ents = [e.id for e in registry.entities()]
        for metric in ("Loss", "Thr"):
            for a, b in itertools.product(ents, ents):
                calls += 1
                try:
                    r = q.metric_between(metric, a, b)
                except SameDomain:
                    mismatches += registry.domain_of(a) != registry.domain_of(b)
                    continue
                o = sql_between(tables, metric, a, b)
                got = None if r is None else (
                    r.value.value, (*r.via.domains, *r.via.theodolites), r.reversed)
                mismatches += got != o
            for a in ents:
                for kind, prefix in ((EntityKind.STORAGE, "S"), (EntityKind.COMPUTING, "C")):
                    calls += 2
                    rows = [(r.entity, r.value.value, (*r.via.domains, *r.via.theodolites),
                             r.reversed) for r in q.metric_to_kind(metric, a, kind)]
                    mismatches += rows != sql_to_kind(tables, metric, a, prefix)
                    b = q.best_partner(metric, a, kind)
                    o = sql_best(tables, metric, a, prefix)
                    mismatches += (None if b is None else (b.entity, b.value.value)) != (
                        None if o is None else o[:2])
    elapsed = time.perf_counter() - start
    print(f"criterion 1: {calls} query evaluations, {mismatches} mismatches, {elapsed:.1f}s")
    assert mismatches == 0
    assert elapsed < 30


# -- 2 -----------------------------------------------------------------------

def c2_s3_fixture():
    registry = Registry()
    registry.register_entity("C2", EntityKind.COMPUTING, "D1")
    registry.register_entity("T1", EntityKind.THEODOLITE, "D1")
    registry.register_entity("S3", EntityKind.STORAGE, "D2")
    registry.register_entity("T4", EntityKind.THEODOLITE, "D2")
    registry.designate_theodolites("D1", "D2", "T1", "T4")
    store = MetricStore(registry)
    store.define_metric("NetworkPacketLoss", Polarity.LOWER_IS_BETTER, None, (0.0, 1.0))
    store.ingest("NetworkPacketLoss", "T1", "T4", 0.02, 1000)
    return registry, store


@acceptance(2, "C2/S3 worked example: four access patterns")
def test_c2_s3_worked_example():
    registry, store = c2_s3_fixture()
    q = QueryEngine(registry, store)
    r = q.metric_between("NetworkPacketLoss", "C2", "S3")
    assert (r.entity, r.value.value, r.via.theodolites, r.reversed) == ("S3", 0.02, ("T1", "T4"), False)
    rows = q.metric_to_kind("NetworkPacketLoss", "C2", EntityKind.STORAGE)
    assert [(x.entity, x.value.value) for x in rows] == [("S3", 0.02)]
    best = q.best_partner("NetworkPacketLoss", "C2", EntityKind.STORAGE)
    assert (best.entity, best.value.value) == ("S3", 0.02)
    # TheodoliteA='T4' selects nothing: T4 is TheodoliteB in the only row
    tables = Tables(theodolite=[("D1", "D2", "T1", "T4")])
    assert q.partner_theodolites("T4") == [] == sql_partners(tables, "T4")
    assert q.partner_theodolites("T1") == ["T4"]
    # with the return designation, T4 discovers T1 as its partner
    registry.designate_theodolites("D2", "D1", "T4", "T1")
    assert q.partner_theodolites("T4") == ["T1"]
    assert q.metric_between("NetworkPacketLoss", "C2", "S3").value.value == 0.02


# -- 3 -----------------------------------------------------------------------

@acceptance(3, "mesh cost equals enumeration for D in [1, 100]")
def test_mesh_cost():
    for d in range(1, 101):
        undirected = sum(1 for _ in itertools.combinations(range(d), 2))
        directed = sum(1 for _ in itertools.permutations(range(d), 2))
        assert mesh_cost(d) == undirected == math.comb(d, 2)
        assert mesh_cost(d, directed=True) == directed == d * (d - 1)


# -- 4 -----------------------------------------------------------------------

def representativeness_spec(num_domains, seed, theodolites=1):
    spec = TopologySpec(num_domains, computing=4, storage=10 - 4 - theodolites,
                        theodolites=theodolites, internal_cost_range=(0.5, 1.0),
                        external_cost_range=(20.0, 100.0), noise_fraction=0.0,
                        seed=seed, regime="any")
    assert spec.internal_cost_range[1] <= 0.05 * spec.external_cost_range[0]
    return spec


@acceptance(4, "representativeness: worst error <= 0.10 on 50 x 10, < 10 s")
def test_representativeness_large():
    start = time.perf_counter()
    registry, store, truth = build(representativeness_spec(50, seed=4))
    report = representativeness_error(truth, registry, store)
    elapsed = time.perf_counter() - start
    print(f"criterion 4: {report.pairs} pairs, worst {report.worst:.4f}, "
          f"mean {report.mean:.4f}, {elapsed:.2f}s")
    assert report.pairs == 50 * 49 * 9 * 9
    assert report.worst <= 0.10
    assert elapsed < 10


@acceptance(4, "representativeness: worst error <= 0.10 on 50 x 10, < 10 s")
@pytest.mark.parametrize("seed", range(10))
def test_representativeness_brute_force(seed):
    spec = representativeness_spec(2 + seed % 4, seed, theodolites=1 + seed % 3)
    registry, store, truth = build(spec)
    worst = 0.0
    # enumerate every cross-domain C/S pair from the ground truth and the log
    logged = {(m.theodolite_a, m.theodolite_b): m.value for m in store.log()}
    by_pair = {d.domains: d.theodolites for d in registry.designations()}
    cs = [e for e in truth.entities.values() if e.kind is not EntityKind.THEODOLITE]
    for e, f in itertools.product(cs, cs):
        if e.domain == f.domain:
            continue
        ta, tb = by_pair[(e.domain, f.domain)]
        true = truth.link[e.id] + truth.inter_cost(e.domain, f.domain) + truth.link[f.id]
        worst = max(worst, abs(logged[(ta, tb)] - true) / true)
    report = representativeness_error(truth, registry, store)
    assert report.worst == pytest.approx(worst, rel=1e-12)
    assert worst <= 0.10


# -- 5 -----------------------------------------------------------------------

@acceptance(5, "validator discriminates compliant from violating topologies")
def test_validator_discrimination():
    for seed in range(100):
        rng = random.Random(seed)
        n = rng.randint(2, 8)
        theodolites = rng.randint(1, 3)
        for regime in ("compliant", "violating"):
            _, truth = generate(TopologySpec(n, computing=2, storage=2, theodolites=theodolites,
                                             seed=seed, regime=regime))
            for d in truth.domains():
                report = validate_domain(truth.domain_view(d), rho=3, epsilon=0.1)
                if regime == "compliant":
                    assert report.passes, (seed, d, report)
                else:
                    assert not report.passes, (seed, d, report)
                    assert report.violations


# -- 6 -----------------------------------------------------------------------

small_grids = st.randoms(use_true_random=False).map(lambda r: random_grid(r, 6, 25, 40))


@acceptance(6, "invariant suite, 1000 cases per property")
@MANY
@given(st.lists(st.tuples(st.integers(0, 15), st.sampled_from(list(EntityKind)),
                          st.integers(0, 4)), max_size=40))
def test_partition_uniqueness(attempts):
    registry = Registry()
    first = {}
    for i, kind, dom in attempts:
        eid = f"E{i}"
        before = registry.entities()
        if eid in first:
            with pytest.raises(DuplicateEntity):
                registry.register_entity(eid, kind, f"D{dom}")
            assert registry.entities() == before
        else:
            registry.register_entity(eid, kind, f"D{dom}")
            first[eid] = f"D{dom}"
    rows = [(e.id, e.domain) for e in registry.entities()]
    assert len(rows) == len({eid for eid, _ in rows}) == len(first)
    assert dict(rows) == first
    assert sum(len(registry.members(d)) for d in registry.domains()) == len(rows)


@acceptance(6, "invariant suite, 1000 cases per property")
@MANY
@given(st.randoms(use_true_random=False))
def test_designation_well_formedness(rng):
    registry, _, _ = random_grid(rng, 6, 25, 0)
    ents = registry.entities()
    doms = registry.domains()
    for _ in range(20):
        try:
            registry.designate_theodolites(rng.choice(doms), rng.choice(doms),
                                           rng.choice(ents).id, rng.choice(ents).id)
        except GridMonError:
            pass
    seen = set()
    for d in registry.designations():
        assert d.domain_a != d.domain_b and d.domains not in seen
        seen.add(d.domains)
        for tid, dom in ((d.theodolite_a, d.domain_a), (d.theodolite_b, d.domain_b)):
            assert registry.domain_of(tid) == dom
            assert registry.entity(tid).kind is EntityKind.THEODOLITE


METRICS = [MetricDefinition("Loss", Polarity.LOWER_IS_BETTER),
           MetricDefinition("Thr", Polarity.HIGHER_IS_BETTER)]
reals = st.floats(-1e9, 1e9, allow_nan=False)


@acceptance(6, "invariant suite, 1000 cases per property")
@MANY
@given(st.sampled_from(METRICS), reals, reals, reals)
def test_compare_total_order(metric, x, y, z):
    a, b, c = (ConnectivityValue(metric, v) for v in (x, y, z))
    opposite = {Ordering.BETTER: Ordering.WORSE, Ordering.WORSE: Ordering.BETTER,
                Ordering.EQUAL: Ordering.EQUAL}
    for p, q in ((a, b), (b, c), (a, c)):
        assert compare(q, p) is opposite[compare(p, q)]
    if compare(a, b) is Ordering.BETTER and compare(b, c) is Ordering.BETTER:
        assert compare(a, c) is Ordering.BETTER
    if compare(a, b) is Ordering.EQUAL and compare(b, c) is Ordering.EQUAL:
        assert compare(a, c) is Ordering.EQUAL
    ranked = sorted([a, b, c], key=lambda v: metric.sort_key(v.value))
    assert all(compare(ranked[i], ranked[i + 1]) is not Ordering.WORSE for i in range(2))


@acceptance(6, "invariant suite, 1000 cases per property")
@MANY
@given(small_grids)
def test_latest_matches_log_scan(grid):
    registry, store, _ = grid
    log = store.log()
    for d in registry.designations():
        for metric in ("Loss", "Thr"):
            stream = [(m.timestamp, i, m.value) for i, m in enumerate(log)
                      if (m.metric, m.theodolite_a, m.theodolite_b) == (metric, *d.theodolites)]
            got = store.latest(metric, *d.theodolites)
            if not stream:
                assert got is None
            else:
                assert got.value == max(stream)[2]


@acceptance(6, "invariant suite, 1000 cases per property")
@MANY
@given(small_grids, st.randoms(use_true_random=False))
def test_argmin_invariance(grid, rng):
    registry, store, _ = grid
    # an arbitrary strictly increasing map on the observed values; integer
    # steps keep it exactly order-preserving in floating point
    values = sorted({m.value for m in store.log() if m.metric == "Loss"})
    level = rng.randint(-1000, 1000)
    f = {}
    for v in values:
        level += rng.randint(1, 1000)
        f[v] = float(level)
    shifted = MetricStore(registry)
    shifted.define_metric("Loss", Polarity.LOWER_IS_BETTER)
    for m in store.log():
        if m.metric == "Loss":
            shifted.ingest("Loss", m.theodolite_a, m.theodolite_b, f[m.value], m.timestamp)
    q1, q2 = QueryEngine(registry, store), QueryEngine(registry, shifted)
    for e in registry.entities():
        for kind in (EntityKind.STORAGE, EntityKind.COMPUTING):
            a = q1.best_partner("Loss", e.id, kind)
            b = q2.best_partner("Loss", e.id, kind)
            assert (a and a.entity) == (b and b.entity)


def snapshot_answers(registry, store):
    q = QueryEngine(registry, store)
    out = [[(d.domains, d.theodolites) for d in registry.designations()]]
    for e in registry.entities():
        for metric in ("Loss", "Thr"):
            out.append([r.to_record() for r in q.metric_to_kind(metric, e.id, "Storage")])
            best = q.best_partner(metric, e.id, "Computing")
            out.append(best and best.to_record())
    for t in registry.entities("Theodolite"):
        out.append(q.partner_theodolites(t.id))
    return out


@acceptance(6, "invariant suite, 1000 cases per property")
@MANY
@given(small_grids)
def test_snapshot_round_trip(grid):
    registry, store, _ = grid
    with tempfile.TemporaryDirectory() as tmp:
        snap, log = Path(tmp, "reg.jsonl"), Path(tmp, "log.jsonl")
        persistence.save(registry, store, snap, log)
        saved = snap.read_bytes(), log.read_bytes()
        r2, s2 = persistence.load(snap, log)
        assert snapshot_answers(r2, s2) == snapshot_answers(registry, store)
        persistence.save(r2, s2, snap, log)
        assert (snap.read_bytes(), log.read_bytes()) == saved
