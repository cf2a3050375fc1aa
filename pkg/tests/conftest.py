import numpy as np
import pytest

from aefkit.wan import AirportRecord, WanGraph


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        name = report.nodeid.split("::")[-1]
        if report.passed:
            status = "PASS"
        elif report.skipped:
            status = "SKIP"
        else:
            status = "FAIL"
        extra = ""
        if report.skipped and report.longrepr:
            extra = f"  ({report.longrepr[2].removeprefix('Skipped: ')})"
        print(f"\n[{status}] {name}{extra}", flush=True)


def make_graph(edges, extra_nodes=(), country="Testland"):
    """Graph from (u, v, w) triples; nodes are whatever codes appear."""
    codes = sorted({u for u, _, _ in edges} | {v for _, v, _ in edges} | set(extra_nodes))
    records = [AirportRecord(c, None, c, c, country, 0.0, 0.0) for c in codes]
    return WanGraph(records, {(u, v): float(w) for u, v, w in edges})


@pytest.fixture
def k4():
    codes = ["AAA", "BBB", "CCC", "DDD"]
    return make_graph([(u, v, 1) for i, u in enumerate(codes) for v in codes[i + 1 :]])


@pytest.fixture
def path3():
    return make_graph([("AAA", "BBB", 1), ("BBB", "CCC", 1)])


@pytest.fixture
def star4():
    return make_graph([("SSS", "AAA", 1), ("SSS", "BBB", 1), ("SSS", "CCC", 1)])


def random_connected_graph(rng: np.random.Generator, max_nodes=6, max_weight=10, extra_edge_p=0.4):
    """Random connected graph with integer weights; spanning tree plus extras."""
    n = int(rng.integers(2, max_nodes + 1))
    codes = [f"N{i:02d}" for i in range(n)]
    edges = {}
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges[(codes[j], codes[i])] = int(rng.integers(1, max_weight + 1))
    for i in range(n):
        for j in range(i + 1, n):
            key = (codes[i], codes[j])
            if key not in edges and rng.random() < extra_edge_p:
                edges[key] = int(rng.integers(1, max_weight + 1))
    records = [AirportRecord(c, None, c, c, "Testland", 0.0, 0.0) for c in codes]
    return WanGraph(records, {k: float(v) for k, v in edges.items()})
