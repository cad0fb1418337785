"""Weighted undirected graphs, node metadata and component handling.

Nodes carry opaque external ids (strings) and are stored under dense
0-based indices.  Adjacency is held in CSR form with neighbours sorted by
index inside each row, which fixes the summation order used by every
matrix-vector product downstream.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

logger = logging.getLogger(__name__)

__all__ = [
    "EdgeListError",
    "Graph",
    "NodeAttributes",
    "NodeItemSets",
    "load_edge_list",
    "write_edge_list",
    "degree",
    "connected_components",
    "largest_component",
    "load_node_attributes",
    "load_item_sets",
]


class EdgeListError(ValueError):
    """Malformed or inconsistent edge-list input."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class Graph:
    """Immutable weighted undirected graph.

    Parameters
    ----------
    node_ids : sequence of str
        External labels; position is the internal index.
    src, dst : array_like of int
        Endpoints of each undirected edge, any orientation.
    weights : array_like of float
        Strictly positive edge weights.

    Duplicate edges must have been resolved by the caller; use
    :func:`load_edge_list` or :meth:`from_edges` for validated input.
    """

    def __init__(self, node_ids, src, dst, weights):
        self.node_ids = tuple(str(n) for n in node_ids)
        n = len(self.node_ids)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        w = np.asarray(weights, dtype=np.float64)
        if not (src.shape == dst.shape == w.shape):
            raise ValueError("src, dst and weights must have equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(src == dst):
                raise ValueError("self-loops are not allowed")
            if not np.all(w > 0) or not np.all(np.isfinite(w)):
                raise ValueError("edge weights must be finite and positive")
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        order = np.lexsort((hi, lo))
        lo, hi, w = lo[order], hi[order], w[order]
        if lo.size > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if np.any(dup):
                k = int(np.flatnonzero(dup)[0])
                raise ValueError(
                    f"duplicate edge ({self.node_ids[lo[k]]}, {self.node_ids[hi[k]]})"
                )
        self.edge_src = lo
        self.edge_dst = hi
        self.edge_weight = w

        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        vals = np.concatenate([w, w])
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=self.indptr[1:])
        self.indices = cols
        self.data = vals
        self.degrees = np.bincount(rows, weights=vals, minlength=n).astype(np.float64)
        self._index = None
        for arr in (self.edge_src, self.edge_dst, self.edge_weight,
                    self.indptr, self.indices, self.data, self.degrees):
            arr.flags.writeable = False

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], node_ids: Sequence | None = None):
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples of external ids.

        Nodes are indexed by first appearance unless ``node_ids`` is given,
        in which case it fixes the order and may include isolated nodes.
        """
        index = {}
        if node_ids is not None:
            for nid in node_ids:
                index.setdefault(str(nid), len(index))
        seen = {}
        for e in edges:
            u, v = str(e[0]), str(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            for x in (u, v):
                if x not in index:
                    if node_ids is not None:
                        raise ValueError(f"unknown node id {x!r}")
                    index[x] = len(index)
            i, j = index[u], index[v]
            key = (min(i, j), max(i, j))
            if key in seen and seen[key] != w:
                raise ValueError(f"conflicting weights for edge ({u}, {v})")
            seen[key] = w
        ids = list(index)
        if seen:
            keys = np.array(list(seen), dtype=np.int64)
            ws = np.array(list(seen.values()), dtype=np.float64)
            return cls(ids, keys[:, 0], keys[:, 1], ws)
        return cls(ids, [], [], [])

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def num_edges(self) -> int:
        return int(self.edge_src.size)

    @property
    def index(self) -> dict:
        """Map external id -> internal index."""
        if self._index is None:
            self._index = {nid: i for i, nid in enumerate(self.node_ids)}
        return self._index

    def neighbors(self, i: int):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def adjacency_matrix(self) -> sp.csr_matrix:
        n = self.num_nodes
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(n, n))

    def subgraph(self, nodes) -> tuple["Graph", dict]:
        """Induced subgraph on ``nodes`` (internal indices, kept in ascending order).

        Returns the subgraph and the old->new index mapping.
        """
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        remap = np.full(self.num_nodes, -1, dtype=np.int64)
        remap[nodes] = np.arange(nodes.size)
        keep = (remap[self.edge_src] >= 0) & (remap[self.edge_dst] >= 0)
        sub = Graph(
            [self.node_ids[i] for i in nodes],
            remap[self.edge_src[keep]],
            remap[self.edge_dst[keep]],
            self.edge_weight[keep],
        )
        return sub, {int(o): int(k) for k, o in enumerate(nodes)}

    def edge_set(self) -> dict:
        """Canonical ``{frozenset({u, v}): w}`` keyed by external ids."""
        ids = self.node_ids
        return {
            frozenset((ids[i], ids[j])): float(w)
            for i, j, w in zip(self.edge_src, self.edge_dst, self.edge_weight)
        }

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return set(self.node_ids) == set(other.node_ids) and self.edge_set() == other.edge_set()

    def __hash__(self):
        return id(self)

    def __repr__(self):
        return f"Graph(N={self.num_nodes}, E={self.num_edges})"


def load_edge_list(source: TextIO | Iterable[str], weighted: bool | None = None) -> Graph:
    """Parse a whitespace-separated edge list.

    Each non-blank line not starting with ``#`` is ``u v`` or ``u v w``.
    Unweighted lines get weight 1.0.  With ``weighted=True`` every line must
    carry a weight; with ``weighted=False`` none may.

    Raises
    ------
    EdgeListError
        Malformed line, non-positive weight, self-loop, or a repeated edge
        with a different weight.  Repeats with equal weight collapse.
    """
    index: dict[str, int] = {}
    weights: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListError(f"expected 'u v' or 'u v w', got {line!r}", lineno)
        if weighted is True and len(parts) != 3:
            raise EdgeListError("missing weight", lineno)
        if weighted is False and len(parts) != 2:
            raise EdgeListError("unexpected weight column", lineno)
        u, v = parts[0], parts[1]
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise EdgeListError(f"bad weight {parts[2]!r}", lineno) from None
            if not (w > 0) or not np.isfinite(w):
                raise EdgeListError(f"weight must be positive, got {parts[2]}", lineno)
        else:
            w = 1.0
        if u == v:
            raise EdgeListError(f"self-loop on {u!r}", lineno)
        i = index.setdefault(u, len(index))
        j = index.setdefault(v, len(index))
        key = (i, j) if i < j else (j, i)
        old = weights.get(key)
        if old is not None and old != w:
            raise EdgeListError(
                f"conflicting duplicate edge ({u}, {v}): {old} vs {w}", lineno
            )
        weights[key] = w
    if weights:
        keys = np.fromiter((k for pair in weights for k in pair), dtype=np.int64,
                           count=2 * len(weights)).reshape(-1, 2)
        ws = np.fromiter(weights.values(), dtype=np.float64, count=len(weights))
        return Graph(list(index), keys[:, 0], keys[:, 1], ws)
    return Graph(list(index), [], [], [])


def write_edge_list(g: Graph, out: TextIO, weighted: bool = True) -> None:
    """Write ``g`` as ``u v w`` lines (``repr`` floats, so weights round-trip)."""
    ids = g.node_ids
    for i, j, w in zip(g.edge_src, g.edge_dst, g.edge_weight):
        if weighted:
            out.write(f"{ids[i]} {ids[j]} {float(w)!r}\n")
        else:
            out.write(f"{ids[i]} {ids[j]}\n")


def degree(g: Graph, i: int) -> float:
    """Weighted degree ``sum_j w_ij`` of node index ``i``."""
    if not 0 <= i < g.num_nodes:
        raise IndexError(f"node index {i} out of range for N={g.num_nodes}")
    return float(g.degrees[i])


def connected_components(g: Graph) -> list[np.ndarray]:
    """Components as sorted index arrays, largest first.

    Equal sizes are ordered by their smallest member.
    """
    if g.num_nodes == 0:
        return []
    _, labels = _cc(g.adjacency_matrix(), directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    comps = np.split(order, bounds)
    comps.sort(key=lambda c: (-c.size, int(c[0])))
    return comps


def component_labels(g: Graph) -> tuple[np.ndarray, list[np.ndarray]]:
    """Per-node component number (in :func:`connected_components` order)."""
    comps = connected_components(g)
    labels = np.empty(g.num_nodes, dtype=np.int64)
    for k, c in enumerate(comps):
        labels[c] = k
    return labels, comps


def largest_component(g: Graph) -> tuple[Graph, dict]:
    """Induced subgraph on the largest component plus its old->new index map."""
    if g.num_nodes == 0:
        raise ValueError("graph has no nodes")
    comps = connected_components(g)
    return g.subgraph(comps[0])


@dataclass
class NodeAttributes:
    """Categorical node features; ``None`` marks a missing value."""

    features: list[str]
    values: dict[str, dict[str, str | None]] = field(default_factory=dict)
    skipped: int = 0

    def get(self, node_id: str, feature: str) -> str | None:
        if feature not in self.features:
            raise KeyError(f"unknown feature {feature!r}")
        return self.values.get(node_id, {}).get(feature)


@dataclass
class NodeItemSets:
    """Items (e.g. voted stories) per node; absent nodes have no items."""

    items: dict[str, frozenset] = field(default_factory=dict)
    skipped: int = 0

    def get(self, node_id: str) -> frozenset:
        return self.items.get(node_id, frozenset())


def load_node_attributes(source: TextIO, graph: Graph | None = None) -> NodeAttributes:
    """Read a CSV whose first column is the node id and header names features.

    Empty cells become ``None``.  Rows for ids absent from ``graph`` are
    skipped and counted in ``skipped``.
    """
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("attribute file is empty") from None
    if len(header) < 2:
        raise ValueError("attribute header needs an id column and at least one feature")
    features = [h.strip() for h in header[1:]]
    known = graph.index if graph is not None else None
    attrs = NodeAttributes(features=features)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(
                f"line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        nid = row[0].strip()
        if known is not None and nid not in known:
            attrs.skipped += 1
            continue
        attrs.values[nid] = {
            f: (cell.strip() or None) for f, cell in zip(features, row[1:])
        }
    if attrs.skipped:
        logger.warning("skipped %d attribute rows for unknown nodes", attrs.skipped)
    return attrs


def load_item_sets(source: TextIO, graph: Graph | None = None) -> NodeItemSets:
    """Read ``node item`` pairs (whitespace separated, ``#`` comments)."""
    known = graph.index if graph is not None else None
    sets: dict[str, set] = {}
    skipped = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'node item', got {line!r}")
        nid, item = parts
        if known is not None and nid not in known:
            skipped += 1
            continue
        sets.setdefault(nid, set()).add(item)
    if skipped:
        logger.warning("skipped %d item rows for unknown nodes", skipped)
    return NodeItemSets({k: frozenset(v) for k, v in sets.items()}, skipped)
