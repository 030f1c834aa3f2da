"""Undirected simple graphs in compressed (CSR) adjacency form."""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as ssp

from .errors import DataError

#: Hop distance reported for nodes that cannot be reached from the source.
UNREACHABLE = math.inf


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph.

    ``indptr``/``indices`` hold sorted, symmetric neighbor lists; node ids are
    dense integers ``0..num_nodes-1``.  ``node_attrs`` is an optional
    ``(num_nodes, attr_dim)`` float matrix.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    node_attrs: np.ndarray | None = None
    node_ids: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_edges(self) -> int:
        return int(self.indices.size // 2)

    @property
    def attr_dim(self) -> int:
        return 0 if self.node_attrs is None else int(self.node_attrs.shape[1])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return neighbors(self, v)

    def has_edge(self, u: int, v: int) -> bool:
        row = self.indices[self.indptr[u]:self.indptr[u + 1]]
        i = np.searchsorted(row, v)
        return bool(i < row.size and row[i] == v)

    def edges(self) -> np.ndarray:
        """Canonical ``(m, 2)`` edge array with ``u < v``, lexicographically sorted."""
        src = np.repeat(np.arange(self.num_nodes), self.degrees())
        mask = src < self.indices
        return np.stack([src[mask], self.indices[mask]], axis=1)

    def adjacency(self) -> ssp.csr_matrix:
        data = np.ones(self.indices.size, dtype=np.float64)
        return ssp.csr_matrix((data, self.indices, self.indptr),
                              shape=(self.num_nodes, self.num_nodes))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.int64(self.num_nodes).tobytes())
        h.update(self.edges().astype(np.int64).tobytes())
        return h.hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if self.num_nodes != other.num_nodes:
            return False
        if not (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)):
            return False
        if (self.node_attrs is None) != (other.node_attrs is None):
            return False
        return self.node_attrs is None or np.array_equal(self.node_attrs, other.node_attrs)

    __hash__ = None  # type: ignore[assignment]


def build_graph(edges: Iterable[Sequence[int]] | np.ndarray, num_nodes: int,
                attrs: np.ndarray | None = None,
                node_ids: np.ndarray | None = None) -> Graph:
    """Build a :class:`Graph` from an edge list.

    Duplicate edges (in either orientation) are merged.  Self-loops, ids
    outside ``0..num_nodes-1`` and attribute matrices with the wrong number of
    rows raise :class:`DataError`.
    """
    if num_nodes < 0:
        raise DataError(f"num_nodes must be non-negative, got {num_nodes}")
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DataError(f"edges must be a sequence of pairs, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() >= num_nodes):
        raise DataError(f"edge endpoint out of range 0..{num_nodes - 1}")
    loops = arr[:, 0] == arr[:, 1]
    if loops.any():
        raise DataError(f"self-loop at node {int(arr[loops][0, 0])}")

    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    canon = np.unique(np.stack([lo, hi], axis=1), axis=0)
    src = np.concatenate([canon[:, 0], canon[:, 1]])
    dst = np.concatenate([canon[:, 1], canon[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)

    if attrs is not None:
        attrs = np.asarray(attrs, dtype=np.float64)
        if attrs.ndim != 2 or attrs.shape[0] != num_nodes:
            raise DataError(
                f"attribute matrix must have {num_nodes} rows, got shape {attrs.shape}")
        attrs.setflags(write=False)
    indptr.setflags(write=False)
    dst = np.ascontiguousarray(dst)
    dst.setflags(write=False)
    return Graph(num_nodes, indptr, dst, attrs, node_ids)


def neighbors(g: Graph, v: int) -> np.ndarray:
    if not 0 <= v < g.num_nodes:
        raise DataError(f"node {v} out of range 0..{g.num_nodes - 1}")
    return g.indices[g.indptr[v]:g.indptr[v + 1]]


def bfs_distances(g: Graph, source: int, restrict: Iterable[int] | None = None,
                  max_depth: int | None = None) -> dict[int, float]:
    """Unweighted shortest-path lengths from ``source``.

    With ``restrict`` the search only walks through the given node set and the
    result covers exactly those nodes.  Nodes not reached get
    :data:`UNREACHABLE`.  ``max_depth`` stops the search early; nodes beyond it
    are reported as unreachable.
    """
    if not 0 <= source < g.num_nodes:
        raise DataError(f"node {source} out of range 0..{g.num_nodes - 1}")
    allowed = None if restrict is None else set(int(x) for x in restrict)
    if allowed is not None and source not in allowed:
        raise DataError(f"source {source} is not in the restricted node set")
    dist = reached_distances(g, source, allowed, max_depth)
    domain = range(g.num_nodes) if allowed is None else sorted(allowed)
    return {v: dist.get(v, UNREACHABLE) for v in domain}


def reached_distances(g: Graph, source: int, allowed: set[int] | None = None,
                      max_depth: int | None = None) -> dict[int, int]:
    """Distances of the nodes actually reached by BFS from ``source``."""
    dist = {source: 0}
    queue = deque([source])
    indptr, indices = g.indptr, g.indices
    while queue:
        u = queue.popleft()
        du = dist[u]
        if max_depth is not None and du >= max_depth:
            continue
        for w in indices[indptr[u]:indptr[u + 1]].tolist():
            if w in dist or (allowed is not None and w not in allowed):
                continue
            dist[w] = du + 1
            queue.append(w)
    return dist


def read_edge_list(path: str | Path, attrs_path: str | Path | None = None) -> Graph:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` or ``%`` are comments.  Arbitrary integer node
    labels are remapped to ``0..n-1`` in ascending label order; the original
    labels are kept on ``Graph.node_ids``.  Self-loops are rejected.
    """
    path = Path(path)
    if path.suffix == ".mat":
        return _read_mat(path, attrs_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#%":
            continue
        tok = s.split()
        if len(tok) < 2:
            raise DataError(f"{path}:{lineno}: expected two node ids")
        try:
            pairs.append((int(tok[0]), int(tok[1])))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not pairs:
        raise DataError(f"{path}: no edges")
    raw = np.asarray(pairs, dtype=np.int64)
    node_ids, local = np.unique(raw, return_inverse=True)
    local = local.reshape(-1, 2)
    attrs = None if attrs_path is None else read_attributes(attrs_path)
    return build_graph(local, node_ids.size, attrs, node_ids=node_ids)


def _read_mat(path: Path, attrs_path: str | Path | None) -> Graph:
    # SEAL-style .mat file holding a sparse adjacency under "net".
    from scipy.io import loadmat

    try:
        mat = loadmat(str(path))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    if "net" not in mat:
        raise DataError(f"{path}: no 'net' adjacency matrix")
    coo = ssp.coo_matrix(mat["net"])
    edges = np.stack([coo.row, coo.col], axis=1)
    attrs = None if attrs_path is None else read_attributes(attrs_path)
    n = coo.shape[0]
    return build_graph(edges, n, attrs, node_ids=np.arange(n))


def read_attributes(path: str | Path) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read attributes {path}: {exc}") from exc


def write_edge_list(g: Graph, path: str | Path) -> None:
    ids = g.node_ids if g.node_ids is not None else np.arange(g.num_nodes)
    e = g.edges()
    with open(path, "w") as fh:
        for a, b in e:
            fh.write(f"{ids[a]}\t{ids[b]}\n")


def relabel(g: Graph, perm: np.ndarray) -> Graph:
    """Graph with node ``v`` renamed to ``perm[v]``."""
    perm = np.asarray(perm, dtype=np.int64)
    e = g.edges()
    attrs = None
    if g.node_attrs is not None:
        attrs = np.empty_like(g.node_attrs)
        attrs[perm] = g.node_attrs
    return build_graph(perm[e] if e.size else e, g.num_nodes, attrs)
