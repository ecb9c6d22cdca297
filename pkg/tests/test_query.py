import random

import pytest

from gridmon import EntityKind, QueryEngine
from gridmon.errors import SameDomain, UnknownEntity, UnknownMetric

from oracles import Tables, random_grid, sql_best, sql_to_kind

LOSS = "NetworkPacketLoss"


@pytest.fixture
def loaded(grid):
    registry, store, q = grid
    registry.designate_theodolites("D1", "D2", "T1", "T4")
    registry.designate_theodolites("D1", "D3", "T1", "T9")
    store.ingest(LOSS, "T1", "T4", 0.02, 1000)
    store.ingest(LOSS, "T1", "T9", 0.01, 1000)
    return registry, store, q


def test_metric_between_examples(loaded):
    registry, store, q = loaded
    r = q.metric_between(LOSS, "C2", "S3")
    assert r.entity == "S3" and r.value.value == 0.02
    assert r.via.theodolites == ("T1", "T4") and not r.reversed
    with pytest.raises(SameDomain):
        q.metric_between(LOSS, "C2", "C9")
    registry.register_entity("S8", EntityKind.STORAGE, "D5")
    assert q.metric_between(LOSS, "C2", "S8") is None
    with pytest.raises(UnknownEntity):
        q.metric_between(LOSS, "C2", "S99")
    with pytest.raises(UnknownMetric):
        q.metric_between("Jitter", "C2", "S3")


def test_metric_between_reversed_and_unmeasured(loaded):
    _, store, q = loaded
    r = q.metric_between(LOSS, "S3", "C2")
    assert r.reversed and r.via.domains == ("D1", "D2") and r.value.value == 0.02
    assert q.metric_between("Throughput", "C2", "S3") is None


def _tables(registry, store):
    t = Tables()
    t.domain = [(e.id, e.domain) for e in registry.entities()]
    t.theodolite = [(*d.domains, *d.theodolites) for d in registry.designations()]
    t.measures = [(m.metric, m.theodolite_a, m.theodolite_b, m.value, m.timestamp, i)
                  for i, m in enumerate(store.log())]
    t.lower_is_better = {m.name: m.lower_is_better for m in store.metrics()}
    return t


def test_metric_to_kind_example(loaded):
    registry, store, q = loaded
    # frozen from the nested-loop join over the three tables
    oracle = sql_to_kind(_tables(registry, store), LOSS, "C2", "S")
    assert [(e, v) for e, v, *_ in oracle] == [("S3", 0.02), ("S5", 0.02), ("S7", 0.01)]
    got = q.metric_to_kind(LOSS, "C2", EntityKind.STORAGE)
    assert [(r.entity, r.value.value) for r in got] == [("S3", 0.02), ("S5", 0.02), ("S7", 0.01)]
    assert got[0].via == got[1].via


def test_metric_to_kind_empty_cases(grid):
    registry, store, q = grid
    assert q.metric_to_kind(LOSS, "C2", "Storage") == []
    registry.register_entity("S1", EntityKind.STORAGE, "D1")
    registry.designate_theodolites("D1", "D2", "T1", "T4")
    store.ingest(LOSS, "T1", "T4", 0.2, 1)
    assert [r.entity for r in q.metric_to_kind(LOSS, "C2", "Storage")] == ["S3", "S5"]
    assert q.metric_to_kind(LOSS, "C2", "Computing") == []


def test_best_partner_examples(loaded):
    registry, store, q = loaded
    best = q.best_partner(LOSS, "C2", EntityKind.STORAGE)
    oracle = sql_best(_tables(registry, store), LOSS, "C2", "S")
    assert (best.entity, best.value.value) == (oracle[0], oracle[1]) == ("S7", 0.01)
    assert q.best_partner(LOSS, "C2", EntityKind.COMPUTING) is None


def test_best_partner_tie_breaks_on_id(grid):
    registry, store, q = grid
    registry.designate_theodolites("D1", "D2", "T1", "T4")
    registry.designate_theodolites("D1", "D3", "T1", "T9")
    store.ingest(LOSS, "T1", "T4", 0.02, 1)
    store.ingest(LOSS, "T1", "T9", 0.02, 1)
    assert q.best_partner(LOSS, "C2", "Storage").entity == "S3"


def test_best_partner_higher_is_better(grid):
    registry, store, q = grid
    registry.designate_theodolites("D1", "D2", "T1", "T4")
    registry.designate_theodolites("D1", "D3", "T1", "T9")
    store.ingest("Throughput", "T1", "T4", 100, 1)
    store.ingest("Throughput", "T1", "T9", 400, 1)
    assert q.best_partner("Throughput", "C2", "Storage").entity == "S7"


def test_queries_match_sql_oracle_on_random_grids():
    rng = random.Random(11)
    for _ in range(60):
        registry, store, tables = random_grid(rng)
        q = QueryEngine(registry, store)
        ents = [e.id for e in registry.entities()]
        for metric in ("Loss", "Thr"):
            for c in ents:
                for kind, prefix in ((EntityKind.STORAGE, "S"), (EntityKind.COMPUTING, "C")):
                    got = [(r.entity, r.value.value, (*r.via.domains, *r.via.theodolites),
                            r.reversed) for r in q.metric_to_kind(metric, c, kind)]
                    assert got == sql_to_kind(tables, metric, c, prefix)
                    b = q.best_partner(metric, c, kind)
                    o = sql_best(tables, metric, c, prefix)
                    assert (b is None and o is None) or (b.entity, b.value.value) == o[:2]


def test_domain_consistency_of_to_kind():
    rng = random.Random(5)
    for _ in range(50):
        registry, store, _ = random_grid(rng)
        q = QueryEngine(registry, store)
        for c in registry.entities():
            rows = q.metric_to_kind("Loss", c.id, "Storage")
            by_domain = {}
            for r in rows:
                key = registry.domain_of(r.entity)
                by_domain.setdefault(key, set()).add((r.value.value, r.via, r.reversed))
            assert all(len(v) == 1 for v in by_domain.values())
