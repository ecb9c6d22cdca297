# Walk through the four access patterns on a tiny two-domain grid.
#
# C2 lives in D1, S3 in D2. Each domain has one theodolite and the pair
# (D1, D2) is monitored by T1 -> T4. Anything C2 wants to know about S3 is
# answered by the T1 -> T4 measurement.

from gridmon import EntityKind, MetricStore, Polarity, QueryEngine, Registry

registry = Registry()
registry.register_entity("C2", EntityKind.COMPUTING, "D1")
registry.register_entity("T1", EntityKind.THEODOLITE, "D1")
registry.register_entity("S3", EntityKind.STORAGE, "D2")
registry.register_entity("S5", EntityKind.STORAGE, "D2")
registry.register_entity("T4", EntityKind.THEODOLITE, "D2")
registry.designate_theodolites("D1", "D2", "T1", "T4")

store = MetricStore(registry)
store.define_metric("NetworkPacketLoss", Polarity.LOWER_IS_BETTER, range=(0.0, 1.0))
store.define_metric("Throughput", Polarity.HIGHER_IS_BETTER, unit="kbytes/sec")

store.ingest("NetworkPacketLoss", "T1", "T4", 0.05, 900)
store.ingest("NetworkPacketLoss", "T1", "T4", 0.02, 1000)
# older than what we already hold: kept in the log, flagged stale
late = store.ingest("NetworkPacketLoss", "T1", "T4", 0.30, 950)
print("late sample stale?", late.stale)

q = QueryEngine(registry, store)

r = q.metric_between("NetworkPacketLoss", "C2", "S3")
print("C2 -> S3:", r.value.value, "via", r.via.theodolites)

# every storage element in every other domain, one row each
for row in q.metric_to_kind("NetworkPacketLoss", "C2", EntityKind.STORAGE):
    print("  ", row.entity, row.value.value)

best = q.best_partner("NetworkPacketLoss", "C2", EntityKind.STORAGE)
print("best storage for C2:", best.entity)

# no throughput measured yet, so there is nothing to rank
print("best by throughput:", q.best_partner("Throughput", "C2", EntityKind.STORAGE))

print("T1 probes", q.partner_theodolites("T1"))
print("T4 probes", q.partner_theodolites("T4"))  # T4 has no outgoing designation
