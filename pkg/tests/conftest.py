import numpy as np
import pytest

from flowcomm import Graph


def dense_weights(edges, n):
    """Dense W straight from edge tuples; independent of the CSR build."""
    w = np.zeros((n, n))
    for e in edges:
        a, b = int(e[0]), int(e[1])
        wt = float(e[2]) if len(e) > 2 else 1.0
        w[a, b] = w[b, a] = wt
    return w


def dense_from_graph(g):
    w = np.zeros((g.num_nodes, g.num_nodes))
    for i, j, wt in zip(g.edge_src, g.edge_dst, g.edge_weight):
        w[i, j] = w[j, i] = wt
    return w


TRIANGLE = [(0, 1), (1, 2), (2, 0)]
STAR = [(0, 1), (0, 2), (0, 3)]
EDGE = [(0, 1)]


@pytest.fixture
def triangle():
    return Graph.from_edges(TRIANGLE, node_ids=range(3))


@pytest.fixture
def star():
    return Graph.from_edges(STAR, node_ids=range(4))


@pytest.fixture
def single_edge():
    return Graph.from_edges(EDGE, node_ids=range(2))


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for a ``test_criterion_NN_*`` test.

    A test that errors before recording still gets a FAIL line.
    """
    number = int(request.node.name.split("_")[2])
    lines = request.config.stash.setdefault(_VERDICTS, [])
    seen = []

    def record(ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        lines.append((number, line))
        seen.append(line)
        print(line)
        assert ok, line

    yield record
    if not seen:
        lines.append((number, f"FAIL criterion {number:>2}: raised before completing"))


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
