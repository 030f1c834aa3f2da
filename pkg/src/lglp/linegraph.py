"""Line-graph transformation of labeled enclosing subgraphs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np
import scipy.sparse as ssp

from .errors import DataError
from .graph import Graph
from .subgraph import DEFAULT_LABEL_CAP, EnclosingSubgraph


@dataclass(frozen=True)
class LineGraph:
    """Graph whose nodes are the edges of an augmented enclosing subgraph.

    ``edge_index[i]`` is the (local) endpoint pair of line-graph node ``i``;
    ``adjacency`` is a symmetric CSR 0/1 matrix; ``target_index`` is the node
    standing for the candidate link.
    """

    edge_index: np.ndarray
    adjacency: ssp.csr_matrix
    node_attrs: np.ndarray
    target_index: int

    @property
    def num_nodes(self) -> int:
        return int(self.edge_index.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.nnz // 2)

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def permuted(self, perm: np.ndarray) -> "LineGraph":
        """Same line graph with node ``i`` moved to position ``perm[i]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        p = ssp.csr_matrix((np.ones(perm.size), (perm, np.arange(perm.size))),
                           shape=(perm.size, perm.size))
        adj = (p @ self.adjacency @ p.T).tocsr()
        adj.sort_indices()
        return LineGraph(self.edge_index[inv], adj, self.node_attrs[inv],
                         int(perm[self.target_index]))


def edge_attribute(f1: int, f2: int, x1: np.ndarray | None = None,
                   x2: np.ndarray | None = None,
                   label_cap: int = DEFAULT_LABEL_CAP) -> np.ndarray:
    """``onehot(min(f1, f2)) ++ onehot(max(f1, f2)) [++ x1 + x2]``."""
    for f in (f1, f2):
        if not 0 <= f < label_cap:
            raise DataError(f"label {f} outside [0, {label_cap})")
    out = np.zeros(2 * label_cap)
    out[min(f1, f2)] = 1.0
    out[label_cap + max(f1, f2)] = 1.0
    if x1 is None and x2 is None:
        return out
    if x1 is None or x2 is None:
        raise DataError("node attributes must be given for both endpoints")
    return np.concatenate([out, np.asarray(x1, float) + np.asarray(x2, float)])


def edge_attributes(edges: np.ndarray, labels: np.ndarray, attrs: np.ndarray | None,
                    label_cap: int = DEFAULT_LABEL_CAP) -> np.ndarray:
    """Row-wise :func:`edge_attribute` for an ``(m, 2)`` edge array."""
    if labels.size and (labels.min() < 0 or labels.max() >= label_cap):
        raise DataError(f"labels must lie in [0, {label_cap})")
    la, lb = labels[edges[:, 0]], labels[edges[:, 1]]
    m = edges.shape[0]
    width = 2 * label_cap + (0 if attrs is None else attrs.shape[1])
    out = np.zeros((m, width))
    rows = np.arange(m)
    out[rows, np.minimum(la, lb)] = 1.0
    out[rows, label_cap + np.maximum(la, lb)] = 1.0
    if attrs is not None:
        out[:, 2 * label_cap:] = attrs[edges[:, 0]] + attrs[edges[:, 1]]
    return out


def line_graph_adjacency(edges: np.ndarray, num_nodes: int) -> ssp.csr_matrix:
    """Adjacency of the line graph of a simple graph given by ``edges``.

    Built from the node-edge incidence matrix ``B``: ``B.T @ B`` counts shared
    endpoints, which for a simple graph is 2 on the diagonal and 0/1 elsewhere.
    """
    m = edges.shape[0]
    if m == 0:
        return ssp.csr_matrix((0, 0))
    cols = np.repeat(np.arange(m), 2)
    inc = ssp.csr_matrix((np.ones(2 * m), (edges.ravel(), cols)), shape=(num_nodes, m))
    adj = (inc.T @ inc).tocsr()
    adj.setdiag(0)
    adj.eliminate_zeros()
    adj.sort_indices()
    return adj


def to_line_graph(sub: EnclosingSubgraph, label_cap: int = DEFAULT_LABEL_CAP) -> LineGraph:
    """Inject the target edge into ``sub`` and transform it to its line graph.

    Line-graph nodes are ordered lexicographically by their canonical endpoint
    pair.  Node attributes follow :func:`edge_attribute`.
    """
    if sub.labels is None:
        raise DataError("subgraph must be labeled before transformation")
    local = sub.local
    if local.has_edge(0, 1):
        raise DataError("target edge must be absent from the labeled subgraph")
    edges = local.edges()
    edges = np.concatenate([edges, [[0, 1]]]).astype(np.int64)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    target = int(np.flatnonzero((edges[:, 0] == 0) & (edges[:, 1] == 1))[0])
    adj = line_graph_adjacency(edges, local.num_nodes)
    attrs = edge_attributes(edges, sub.labels, sub.attrs, label_cap)
    return LineGraph(edges, adj, attrs, target)


def line_graph_size(g: Graph) -> tuple[int, int]:
    """``(m, sum(d_i^2) / 2 - m)``: node and edge count of ``L(g)``."""
    d = g.degrees().astype(np.int64)
    m = g.num_edges
    return m, int((d * d).sum() // 2 - m)


def dump_line_graph(lg: LineGraph, fh: TextIO) -> None:
    """Debug dump: one row per node (endpoints, attributes), then the edges."""
    fh.write(f"# target {lg.target_index}\n")
    for i, ((a, b), row) in enumerate(zip(lg.edge_index.tolist(), lg.node_attrs)):
        vals = ",".join(f"{x:g}" for x in row)
        fh.write(f"{i}\t{a}-{b}\t{vals}\n")
    fh.write("# edges\n")
    coo = ssp.triu(lg.adjacency, k=1).tocoo()
    for a, b in sorted(zip(coo.row.tolist(), coo.col.tolist())):
        fh.write(f"{a}\t{b}\n")
