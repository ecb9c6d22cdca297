from __future__ import annotations

import pytest

from gridmon import EntityKind, MetricStore, Polarity, QueryEngine, Registry

_acceptance: list[tuple[int, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        _acceptance.append((number, title, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    criteria: dict[int, tuple[str, list[str]]] = {}
    for number, title, verdict in _acceptance:
        criteria.setdefault(number, (title, []))[1].append(verdict)
    for number in sorted(criteria):
        title, verdicts = criteria[number]
        verdict = "PASS" if all(v == "PASS" for v in verdicts) else "FAIL"
        passed = verdicts.count("PASS")
        terminalreporter.write_line(
            f"[{verdict}] criterion {number}: {title} ({passed}/{len(verdicts)} checks)")


@pytest.fixture
def grid():
    """The C2/S3 example grid: D1 holds C2 and T1, D2 holds S3, S5 and T4,
    D3 holds S7 and T9."""
    registry = Registry()
    for eid, kind, dom in [
        ("C2", EntityKind.COMPUTING, "D1"),
        ("C9", EntityKind.COMPUTING, "D1"),
        ("T1", EntityKind.THEODOLITE, "D1"),
        ("S3", EntityKind.STORAGE, "D2"),
        ("S5", EntityKind.STORAGE, "D2"),
        ("T4", EntityKind.THEODOLITE, "D2"),
        ("S7", EntityKind.STORAGE, "D3"),
        ("T9", EntityKind.THEODOLITE, "D3"),
    ]:
        registry.register_entity(eid, kind, dom)
    store = MetricStore(registry)
    store.define_metric("NetworkPacketLoss", Polarity.LOWER_IS_BETTER, None, (0.0, 1.0))
    store.define_metric("Throughput", Polarity.HIGHER_IS_BETTER, "kbytes/sec")
    return registry, store, QueryEngine(registry, store)
