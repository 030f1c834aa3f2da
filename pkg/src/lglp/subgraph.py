"""h-hop enclosing subgraphs and double-radius node labeling (DRNL)."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TextIO

import numpy as np

from .errors import DataError
from .graph import UNREACHABLE, Graph, build_graph, reached_distances

DEFAULT_LABEL_CAP = 32


@dataclass(frozen=True)
class EnclosingSubgraph:
    """Local view of the neighbourhood of a target pair.

    ``nodes[0]`` and ``nodes[1]`` are the targets.  ``local`` is the induced
    graph over local ids with the target edge removed.  ``labels`` is filled in
    by :func:`drnl_label`.
    """

    nodes: np.ndarray
    local: Graph
    labels: np.ndarray | None = None
    attrs: np.ndarray | None = None
    truncated: bool = False

    @property
    def num_nodes(self) -> int:
        return int(self.nodes.size)

    target_local = (0, 1)


def _ball(g: Graph, src: int, h: int) -> dict[int, int]:
    return reached_distances(g, src, max_depth=h)


def extract_enclosing(g: Graph, u: int, v: int, h: int = 2, max_nodes: int | None = None,
                      seed: int = 0) -> EnclosingSubgraph:
    """Induced subgraph on ``{w : min(d(w,u), d(w,v)) <= h}``.

    The edge ``(u, v)``, if present, is dropped from the local graph.  With
    ``max_nodes`` the outermost hop is uniformly down-sampled so the subgraph
    holds at most that many nodes; the sampler is seeded from ``(seed, u, v)``.
    """
    if u == v:
        raise DataError(f"target pair has identical endpoints {u}")
    for x in (u, v):
        if not 0 <= x < g.num_nodes:
            raise DataError(f"node {x} out of range 0..{g.num_nodes - 1}")
    if h < 0:
        raise DataError(f"hop count must be non-negative, got {h}")

    du, dv = _ball(g, u, h), _ball(g, v, h)
    hop = {w: min(du.get(w, math.inf), dv.get(w, math.inf)) for w in du.keys() | dv.keys()}
    hop.pop(u, None)
    hop.pop(v, None)
    rest = np.array(sorted(hop), dtype=np.int64)

    truncated = False
    if max_nodes is not None and rest.size + 2 > max_nodes:
        hops = np.array([hop[w] for w in rest.tolist()])
        inner = rest[hops < h]
        outer = rest[hops == h]
        room = max(max_nodes - 2 - inner.size, 0)
        rng = np.random.default_rng([seed, min(u, v), max(u, v)])
        keep = rng.choice(outer, size=min(room, outer.size), replace=False)
        rest = np.sort(np.concatenate([inner, keep]))
        if rest.size + 2 > max_nodes:
            rest = rest[:max_nodes - 2]
        truncated = True

    nodes = np.concatenate([[u, v], rest]).astype(np.int64)
    local = induced_subgraph(g, nodes, drop=(0, 1))
    attrs = None if g.node_attrs is None else g.node_attrs[nodes]
    return EnclosingSubgraph(nodes, local, None, attrs, truncated)


def induced_subgraph(g: Graph, nodes: np.ndarray, drop: tuple[int, int] | None = None) -> Graph:
    """Induced graph on ``nodes`` relabelled to local ids ``0..k-1``."""
    pos = {int(w): i for i, w in enumerate(nodes.tolist())}
    edges = []
    for i, w in enumerate(nodes.tolist()):
        for x in g.indices[g.indptr[w]:g.indptr[w + 1]].tolist():
            j = pos.get(x)
            if j is not None and i < j:
                edges.append((i, j))
    if drop is not None:
        a, b = min(drop), max(drop)
        edges = [e for e in edges if e != (a, b)]
    return build_graph(np.asarray(edges, dtype=np.int64).reshape(-1, 2), len(pos))


def drnl_value(d1: float, d2: float) -> int:
    """DRNL label of a non-target node at distances ``d1``, ``d2`` from the targets."""
    if math.isinf(d1) or math.isinf(d2):
        return 0
    d1, d2 = int(d1), int(d2)
    ds = d1 + d2
    half, rem = divmod(ds, 2)
    return 1 + min(d1, d2) + half * (half + rem - 1)


def drnl_label(sub: EnclosingSubgraph, label_cap: int = DEFAULT_LABEL_CAP) -> EnclosingSubgraph:
    """Attach DRNL labels computed from distances inside ``sub.local``.

    Targets get label 1, nodes cut off from either target get 0, and labels
    ``>= label_cap`` are folded into 0.
    """
    local = sub.local
    if local.num_nodes >= 2 and local.has_edge(0, 1):
        raise DataError("target edge must be removed before labeling")
    k = local.num_nodes
    d1 = reached_distances(local, 0)
    d2 = reached_distances(local, 1)
    labels = np.empty(k, dtype=np.int64)
    for w in range(k):
        labels[w] = drnl_value(d1.get(w, UNREACHABLE), d2.get(w, UNREACHABLE))
    labels[:2] = 1
    labels[labels >= label_cap] = 0
    return replace(sub, labels=labels)


def labeled_subgraph(g: Graph, u: int, v: int, h: int = 2,
                     label_cap: int = DEFAULT_LABEL_CAP, max_nodes: int | None = None,
                     seed: int = 0) -> EnclosingSubgraph:
    return drnl_label(extract_enclosing(g, u, v, h, max_nodes, seed), label_cap)


def dump_subgraph(sub: EnclosingSubgraph, fh: TextIO) -> None:
    """Debug dump: node table with labels, then the local edge list."""
    fh.write("# node\toriginal\tlabel\n")
    labels = sub.labels if sub.labels is not None else np.full(sub.num_nodes, -1)
    for i, (w, f) in enumerate(zip(sub.nodes.tolist(), labels.tolist())):
        fh.write(f"{i}\t{w}\t{f}\n")
    fh.write("# edges\n")
    for a, b in sub.local.edges().tolist():
        fh.write(f"{a}\t{b}\n")
