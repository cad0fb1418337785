"""Small generators for planted-structure test graphs."""

from __future__ import annotations

import numpy as np

from .graph import Graph


def _clique_edges(nodes, w=1.0):
    nodes = list(nodes)
    return [(a, b, w) for k, a in enumerate(nodes) for b in nodes[k + 1:]]


def clique(n: int) -> Graph:
    return Graph.from_edges(_clique_edges(range(n)), node_ids=range(n))


def disjoint_cliques(count: int, size: int) -> Graph:
    edges = []
    for c in range(count):
        edges += _clique_edges(range(c * size, (c + 1) * size))
    return Graph.from_edges(edges, node_ids=range(count * size))


def bridged_cliques(size: int, bridge_weight: float = 0.1) -> Graph:
    """Two ``size``-cliques joined by one edge of weight ``bridge_weight``.

    Nodes ``0..size-1`` form the first clique; the bridge joins
    ``size-1`` and ``size``.
    """
    edges = _clique_edges(range(size)) + _clique_edges(range(size, 2 * size))
    edges.append((size - 1, size, bridge_weight))
    return Graph.from_edges(edges, node_ids=range(2 * size))


def random_connected(n: int, p: float, rng: np.random.Generator) -> Graph:
    """G(n, p) plus a random spanning tree, so the result is connected."""
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    pairs = set(zip(iu[keep].tolist(), ju[keep].tolist()))
    perm = rng.permutation(n)
    for k in range(1, n):
        a, b = int(perm[k]), int(perm[rng.integers(k)])
        pairs.add((min(a, b), max(a, b)))
    return Graph.from_edges(((a, b) for a, b in sorted(pairs)), node_ids=range(n))


def random_edges(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Uniform random simple graph with ``m`` edges (no connectivity guarantee)."""
    if m > n * (n - 1) // 2:
        raise ValueError("too many edges")
    chosen: set[int] = set()
    while len(chosen) < m:
        a = rng.integers(0, n, size=2 * (m - len(chosen)))
        b = rng.integers(0, n, size=a.size)
        ok = a != b
        lo, hi = np.minimum(a[ok], b[ok]), np.maximum(a[ok], b[ok])
        for key in (lo * n + hi).tolist():
            if len(chosen) == m:
                break
            chosen.add(key)
    keys = np.fromiter(chosen, dtype=np.int64, count=m)
    keys.sort()
    return Graph(range(n), keys // n, keys % n, np.ones(m))


def core_with_whiskers(core_size: int, p: float, n_whiskers: int, whisker_size: int,
                       rng: np.random.Generator) -> tuple[Graph, list[list[int]]]:
    """Dense random core with clique whiskers, each hung on a distinct core node by one edge.

    Returns the graph and the whisker node lists.
    """
    core = random_connected(core_size, p, rng)
    edges = list(zip(core.edge_src.tolist(), core.edge_dst.tolist()))
    anchors = rng.choice(core_size, size=n_whiskers, replace=False)
    whiskers = []
    nxt = core_size
    for anchor in anchors:
        members = list(range(nxt, nxt + whisker_size))
        edges += [(a, b) for a, b, _ in _clique_edges(members)]
        edges.append((int(anchor), members[0]))
        whiskers.append(members)
        nxt += whisker_size
    return Graph.from_edges(edges, node_ids=range(nxt)), whiskers


def asymmetric_barbell(clique_size: int, sparse_size: int, p: float,
                       rng: np.random.Generator) -> Graph:
    """A clique and a sparse random community joined by a single edge."""
    sparse = random_connected(sparse_size, p, rng)
    edges = [(a, b) for a, b, _ in _clique_edges(range(clique_size))]
    off = clique_size
    edges += [(a + off, b + off) for a, b in zip(sparse.edge_src.tolist(), sparse.edge_dst.tolist())]
    edges.append((clique_size - 1, off))
    return Graph.from_edges(edges, node_ids=range(clique_size + sparse_size))
