"""Comparisons between flows and community quality measures."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .communities import MultiScaleReport, Partition, core_whiskers
from .graph import Graph, NodeAttributes, NodeItemSets

COVOTES = "co-votes"


@dataclass
class CoreOverlap:
    scale: str | None
    size_a: int
    size_b: int
    overlap: float


@dataclass
class CohesivenessScore:
    community: int | None
    feature: str
    score: float | None
    support: int


def _core_members(p: Partition) -> set:
    cw = core_whiskers(p)
    if cw.core is None:
        return set()
    return set(p.communities[cw.core].tolist())


def core_overlap(pa: Partition, pb: Partition, scale: str | None = None,
                 method: str = "min") -> CoreOverlap:
    """Shared fraction of the two partitions' cores.

    ``method="min"`` divides by the smaller core, ``"jaccard"`` by the union.
    """
    if pa.num_nodes != pb.num_nodes:
        raise ValueError(f"partitions cover different node sets ({pa.num_nodes} vs {pb.num_nodes})")
    a, b = _core_members(pa), _core_members(pb)
    if not a or not b:
        return CoreOverlap(scale, len(a), len(b), 0.0)
    shared = len(a & b)
    if method == "min":
        denom = min(len(a), len(b))
    elif method == "jaccard":
        denom = len(a | b)
    else:
        raise ValueError(f"unknown overlap method {method!r}")
    return CoreOverlap(scale, len(a), len(b), shared / denom)


def attribute_cohesiveness(members, attrs: NodeAttributes, feature: str,
                           community: int | None = None) -> CohesivenessScore:
    """Fraction of members sharing the most common value of ``feature``.

    ``members`` are external node ids.  Members without a value are left
    out of the denominator; if none has one the score is ``None``.
    """
    members = list(members)
    if not members:
        raise ValueError("community is empty")
    if feature not in attrs.features:
        raise KeyError(f"unknown feature {feature!r}")
    counts: dict[str, int] = {}
    for nid in members:
        v = attrs.get(nid, feature)
        if v is not None:
            counts[v] = counts.get(v, 0) + 1
    support = sum(counts.values())
    if support == 0:
        return CohesivenessScore(community, feature, None, 0)
    return CohesivenessScore(community, feature, max(counts.values()) / support, support)


def covote_cohesiveness(members, g: Graph, items: NodeItemSets,
                        community: int | None = None) -> CohesivenessScore:
    """Mean number of shared items over edges inside the community.

    ``members`` are internal node indices.
    """
    idx = np.asarray(list(members), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("community is empty")
    inside = np.zeros(g.num_nodes, dtype=bool)
    inside[idx] = True
    mask = inside[g.edge_src] & inside[g.edge_dst]
    if not mask.any():
        return CohesivenessScore(community, COVOTES, None, 0)
    ids = g.node_ids
    total = 0
    for i, j in zip(g.edge_src[mask], g.edge_dst[mask]):
        total += len(items.get(ids[i]) & items.get(ids[j]))
    support = int(mask.sum())
    return CohesivenessScore(community, COVOTES, total / support, support)


@dataclass
class ScaleRow:
    mu: float
    num_communities: int
    core_size: int
    whisker_count: int
    whisker_nodes: int
    fragment_count: int
    mean_cohesiveness: dict = field(default_factory=dict)


@dataclass
class ScaleSummary:
    rows: list[ScaleRow]
    community_rows: list[dict]
    distinct_whisker_nodes: int
    features: list[str]

    def write_csv(self, out: TextIO) -> None:
        cols = self.features
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["mu", "community_id", "role", "size", *cols])
        for r in self.community_rows:
            w.writerow([repr(r["mu"]), r["community_id"], r["role"], r["size"],
                        *(_fmt(r["scores"].get(c)) for c in cols)])
        w.writerow([])
        w.writerow(["mu", "num_communities", "core_size", "whisker_count",
                    "whisker_nodes", "fragment_count", *(f"mean_{c}" for c in cols)])
        for r in self.rows:
            w.writerow([repr(r.mu), r.num_communities, r.core_size, r.whisker_count,
                        r.whisker_nodes, r.fragment_count,
                        *(_fmt(r.mean_cohesiveness.get(c)) for c in cols)])
        w.writerow(["distinct_whisker_nodes", self.distinct_whisker_nodes])


def _fmt(v):
    # empty cell = undefined; never write 0 for a missing score
    return "" if v is None else repr(float(v))


def scale_summary(report: MultiScaleReport, g: Graph, attrs: NodeAttributes | None = None,
                  features: Sequence[str] = (), items: NodeItemSets | None = None) -> ScaleSummary:
    """Per-scale core/whisker counts and mean whisker cohesiveness.

    ``features`` selects attribute columns; ``items`` adds a co-vote
    column.  Undefined community scores are skipped in the means; a scale
    with no defined scores reports ``None``.
    """
    if not report.scales:
        raise ValueError("report has no scales")
    features = list(features)
    if features and attrs is None:
        raise ValueError("features requested without attributes")
    cols = features + ([COVOTES] if items is not None else [])
    ids = g.node_ids
    rows, crows = [], []
    union: set[int] = set()
    for s in report.scales:
        comms = s.partition.communities
        per_col: dict[str, list[float]] = {c: [] for c in cols}
        whisker_nodes: set[int] = set()
        targets = ([(s.core, "core")] if s.core is not None else []) + [(w, "whisker") for w in s.whiskers]
        for cid, role in targets:
            members = comms[cid]
            scores = {}
            for f in features:
                scores[f] = attribute_cohesiveness((ids[i] for i in members), attrs, f, cid).score
            if items is not None:
                scores[COVOTES] = covote_cohesiveness(members, g, items, cid).score
            crows.append({"mu": s.mu, "community_id": cid, "role": role,
                          "size": int(members.size), "scores": scores})
            if role == "whisker":
                whisker_nodes.update(members.tolist())
                for c in cols:
                    if scores[c] is not None:
                        per_col[c].append(scores[c])
        union |= whisker_nodes
        rows.append(ScaleRow(
            mu=s.mu,
            num_communities=len(comms),
            core_size=s.core_size,
            whisker_count=len(s.whiskers),
            whisker_nodes=len(whisker_nodes),
            fragment_count=len(s.fragments),
            mean_cohesiveness={c: (float(np.mean(v)) if v else None) for c, v in per_col.items()},
        ))
    return ScaleSummary(rows, crows, len(union), cols)


def write_overlap_csv(rows: Sequence[CoreOverlap], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["scale", "sizeA", "sizeB", "overlap"])
    for r in rows:
        w.writerow([r.scale, r.size_a, r.size_b, repr(float(r.overlap))])
