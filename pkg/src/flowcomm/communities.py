"""Similarity-threshold community detection on simulated opinions.

Edges whose run-averaged opinion similarity reaches ``1 - mu`` merge their
endpoints; communities are the connected components of those edges.  One
union-find pass reaches the same fixed point as repeatedly sweeping the
edge list, and the result does not depend on edge order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from . import kernels
from .dynamics import STEADY_ZERO_TOL, TrajectoryBundle
from .graph import Graph

WHISKER_MIN_SIZE = 3


@dataclass
class EdgeSimilarity:
    """Run-averaged similarity per edge of ``g`` (edges in ``g.edge_src/dst`` order).

    Undefined edges hold NaN and ``defined == False``.
    """

    src: np.ndarray
    dst: np.ndarray
    values: np.ndarray
    defined: np.ndarray
    step: int | None = None

    @property
    def num_undefined(self) -> int:
        return int(np.count_nonzero(~self.defined))


@dataclass
class Partition:
    """Community label per node; labels are numbered by smallest member index."""

    labels: np.ndarray
    mu: float | None = None
    step: int | None = None
    _communities: list | None = field(default=None, repr=False)

    @property
    def num_nodes(self) -> int:
        return int(self.labels.size)

    @property
    def communities(self) -> list[np.ndarray]:
        if self._communities is None:
            order = np.argsort(self.labels, kind="stable")
            bounds = np.flatnonzero(np.diff(self.labels[order])) + 1
            self._communities = np.split(order, bounds) if order.size else []
        return self._communities

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels)

    def as_sets(self) -> set[frozenset]:
        return {frozenset(c.tolist()) for c in self.communities}

    def refines(self, coarser: "Partition") -> bool:
        """True if every community here lies inside one community of ``coarser``."""
        for c in self.communities:
            if np.unique(coarser.labels[c]).size != 1:
                return False
        return True

    def to_json_obj(self, g: Graph) -> dict:
        ids = g.node_ids
        return {
            "mu": self.mu,
            "t": self.step,
            "communities": [[ids[i] for i in c] for c in self.communities],
        }

    def write_csv(self, g: Graph, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["node_id", "community_id"])
        for nid, lab in zip(g.node_ids, self.labels):
            w.writerow([nid, int(lab)])

    @classmethod
    def from_json_obj(cls, obj: dict, g_or_ids) -> "Partition":
        ids = g_or_ids.node_ids if isinstance(g_or_ids, Graph) else list(g_or_ids)
        index = {nid: i for i, nid in enumerate(ids)}
        labels = np.full(len(ids), -1, dtype=np.int64)
        for k, members in enumerate(obj["communities"]):
            for nid in members:
                labels[index[nid]] = k
        if np.any(labels < 0):
            raise ValueError("partition does not cover every node")
        return cls(labels, obj.get("mu"), obj.get("t"))


@dataclass
class CoreWhiskers:
    core: int | None
    whiskers: list[int]
    fragments: list[int]


@dataclass
class Scale:
    mu: float
    partition: Partition
    core: int | None
    whiskers: list[int]
    fragments: list[int]

    @property
    def core_size(self) -> int:
        return 0 if self.core is None else int(np.count_nonzero(self.partition.labels == self.core))


@dataclass
class MultiScaleReport:
    step: int | None
    scales: list[Scale]

    def to_json_obj(self, g: Graph) -> dict:
        ids = g.node_ids
        out = []
        for s in self.scales:
            comms = s.partition.communities
            out.append({
                "mu": s.mu,
                "num_communities": len(comms),
                "core": None if s.core is None else {
                    "id": s.core, "size": int(comms[s.core].size),
                },
                "whiskers": [
                    {"id": w, "size": int(comms[w].size),
                     "members": [ids[i] for i in comms[w]]}
                    for w in s.whiskers
                ],
                "fragment_count": len(s.fragments),
                "fragment_nodes": int(sum(comms[f].size for f in s.fragments)),
            })
        return {"t": self.step, "scales": out}


def edge_similarity(bundle: TrajectoryBundle, g: Graph, step: int,
                    zero_tol: float = STEADY_ZERO_TOL, num_threads: int = 1) -> EdgeSimilarity:
    """Similarity ``s_ij`` of opinions at ``step`` averaged over runs.

    Per run, ``cos(theta_i - (theta_i^s / theta_j^s) theta_j)`` averaged with
    its ``i <-> j`` mirror so the value is symmetric.  Consensus steady
    states use ratio 1 (plain ``cos(theta_i - theta_j)``).  An edge is
    undefined if some run has ``|theta^s| < zero_tol`` at an endpoint.
    """
    if bundle.num_runs == 0:
        raise ValueError("bundle has no runs")
    theta = np.ascontiguousarray(bundle.snapshot(step).T)
    steady = np.ascontiguousarray(bundle.steady.T)
    ne = g.num_edges
    values = np.empty(ne)
    defined = np.empty(ne, dtype=np.uint8)
    kernels.edge_similarity(g.edge_src, g.edge_dst, theta, steady,
                            bundle.steady_kind == "consensus", zero_tol,
                            values, defined, num_threads)
    return EdgeSimilarity(g.edge_src, g.edge_dst, values, defined.astype(bool), step)


def threshold_partition(g: Graph, sims: EdgeSimilarity, mu: float) -> Partition:
    """Merge endpoints of every defined edge with ``s_ij >= 1 - mu``."""
    if sims.values.shape != (g.num_edges,):
        raise ValueError("similarities do not match the graph's edges")
    labels = kernels.threshold_labels(
        g.num_nodes,
        np.ascontiguousarray(sims.src, dtype=np.int64),
        np.ascontiguousarray(sims.dst, dtype=np.int64),
        np.ascontiguousarray(sims.values, dtype=np.float64),
        np.ascontiguousarray(sims.defined, dtype=np.uint8),
        1.0 - mu,
    )
    return Partition(np.asarray(labels), mu, sims.step)


def core_whiskers(p: Partition) -> CoreWhiskers:
    """Split communities into the core, whiskers (size >= 3) and fragments.

    The core is the largest community; ties go to the one holding the
    smallest node index, which is the lowest label.
    """
    sizes = p.sizes()
    if sizes.size == 0:
        return CoreWhiskers(None, [], [])
    core = int(np.argmax(sizes))  # argmax returns the first, i.e. lowest label
    whiskers = [int(k) for k in np.flatnonzero(sizes >= WHISKER_MIN_SIZE) if k != core]
    fragments = [int(k) for k in np.flatnonzero(sizes < WHISKER_MIN_SIZE) if k != core]
    return CoreWhiskers(core, whiskers, fragments)


def multiscale_sweep(g: Graph, sims: EdgeSimilarity, mus: Sequence[float]) -> MultiScaleReport:
    """Partition at each threshold in ``mus`` (strictly increasing)."""
    mus = [float(m) for m in mus]
    if not mus:
        raise ValueError("need at least one mu")
    if any(b <= a for a, b in zip(mus, mus[1:])):
        raise ValueError("mu values must be strictly increasing")
    scales = []
    for mu in mus:
        p = threshold_partition(g, sims, mu)
        cw = core_whiskers(p)
        scales.append(Scale(mu, p, cw.core, cw.whiskers, cw.fragments))
    return MultiScaleReport(sims.step, scales)


def write_partitions_json(report: MultiScaleReport, g: Graph, out: TextIO) -> None:
    obj = {"t": report.step, "partitions": [s.partition.to_json_obj(g) for s in report.scales]}
    json.dump(obj, out, indent=1, sort_keys=True)
    out.write("\n")


def read_partitions_json(src: TextIO) -> dict:
    return json.load(src)
