"""High-order similarity baselines: Katz, rooted PageRank and SimRank."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import TextIO

import numpy as np
import scipy.sparse as ssp
from scipy.sparse.linalg import eigsh

from .errors import ConfigError
from .graph import Graph

SIMRANK_MAX_NODES = 5000
_ROOT_CHUNK = 512


@dataclass(frozen=True)
class HeuristicConfig:
    katz_beta: float = 0.001
    katz_max_len: int = 6
    pr_damping: float = 0.85
    pr_tol: float = 1e-8
    pr_max_iter: int = 200
    simrank_c: float = 0.8
    simrank_iters: int = 10

    def __post_init__(self):
        if self.katz_beta <= 0:
            raise ConfigError(f"katz_beta must be positive, got {self.katz_beta}")
        if self.katz_max_len < 1:
            raise ConfigError("katz_max_len must be >= 1")
        if not 0 < self.pr_damping < 1:
            raise ConfigError(f"pr_damping must be in (0, 1), got {self.pr_damping}")
        if not 0 < self.simrank_c < 1:
            raise ConfigError(f"simrank_c must be in (0, 1), got {self.simrank_c}")
        if self.simrank_iters < 0:
            raise ConfigError("simrank_iters must be >= 0")


def _pairs(pairs) -> np.ndarray:
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def katz_scores(g: Graph, pairs, cfg: HeuristicConfig = HeuristicConfig()) -> np.ndarray:
    """Truncated Katz index ``sum_l beta^l * walks_l(u, v)`` for ``l <= katz_max_len``."""
    pairs = _pairs(pairs)
    beta = cfg.katz_beta
    deg = g.degrees()
    if deg.size and beta * deg.max() >= 1:
        lam = _spectral_radius(g)
        if beta * lam >= 1:
            warnings.warn(f"Katz series diverges: beta * lambda_max = {beta * lam:.3f} >= 1",
                          RuntimeWarning, stacklevel=2)
    a = g.adjacency()
    out = np.zeros(len(pairs))
    roots, col = np.unique(pairs[:, 0], return_inverse=True)
    for lo in range(0, roots.size, _ROOT_CHUNK):
        chunk = roots[lo:lo + _ROOT_CHUNK]
        x = np.zeros((g.num_nodes, chunk.size))
        x[chunk, np.arange(chunk.size)] = 1.0
        acc = np.zeros_like(x)
        coef = 1.0
        for _ in range(cfg.katz_max_len):
            x = a @ x
            coef *= beta
            acc += coef * x
        sel = (col >= lo) & (col < lo + chunk.size)
        out[sel] = acc[pairs[sel, 1], col[sel] - lo]
    return out


def _spectral_radius(g: Graph) -> float:
    a = g.adjacency()
    if g.num_nodes < 3:
        return float(np.abs(np.linalg.eigvalsh(a.toarray())).max(initial=0.0))
    return float(eigsh(a, k=1, which="LA", return_eigenvectors=False)[0])


def rooted_pagerank_matrix(g: Graph, roots: np.ndarray, cfg: HeuristicConfig = HeuristicConfig()
                           ) -> np.ndarray:
    """Columns are restart-at-root stationary vectors; isolated roots give zeros."""
    alpha = cfg.pr_damping
    deg = g.degrees().astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    # P^T with P = D^-1 A; A symmetric so P^T = A D^-1
    pt = (g.adjacency() @ ssp.diags(inv)).tocsr()
    roots = np.asarray(roots, dtype=np.int64)
    restart = np.zeros((g.num_nodes, roots.size))
    restart[roots, np.arange(roots.size)] = 1.0 - alpha
    restart[:, deg[roots] == 0] = 0.0
    pi = restart / (1.0 - alpha)
    for _ in range(cfg.pr_max_iter):
        nxt = restart + alpha * (pt @ pi)
        delta = np.abs(nxt - pi).sum(axis=0).max(initial=0.0)
        pi = nxt
        if delta < cfg.pr_tol:
            break
    return pi


def rooted_pagerank_scores(g: Graph, pairs, cfg: HeuristicConfig = HeuristicConfig()
                           ) -> np.ndarray:
    """``pi_u[v] + pi_v[u]`` with restart probability ``1 - pr_damping``."""
    pairs = _pairs(pairs)
    roots, inv = np.unique(pairs.ravel(), return_inverse=True)
    inv = inv.reshape(-1, 2)
    out = np.zeros(len(pairs))
    for lo in range(0, roots.size, _ROOT_CHUNK):
        chunk = roots[lo:lo + _ROOT_CHUNK]
        pi = rooted_pagerank_matrix(g, chunk, cfg)
        for side in (0, 1):
            c = inv[:, side]
            sel = (c >= lo) & (c < lo + chunk.size)
            out[sel] += pi[pairs[sel, 1 - side], c[sel] - lo]
    return out


def simrank_matrix(g: Graph, cfg: HeuristicConfig = HeuristicConfig()) -> np.ndarray:
    """Full SimRank table after ``simrank_iters`` iterations from the identity."""
    n = g.num_nodes
    if n > SIMRANK_MAX_NODES:
        raise ConfigError(f"SimRank table limited to {SIMRANK_MAX_NODES} nodes, graph has {n}")
    deg = g.degrees().astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    w = (ssp.diags(inv) @ g.adjacency()).tocsr()
    s = np.eye(n)
    for _ in range(cfg.simrank_iters):
        s = cfg.simrank_c * (w @ (w @ s).T)
        np.fill_diagonal(s, 1.0)
    return s


def simrank_scores(g: Graph, pairs, cfg: HeuristicConfig = HeuristicConfig()) -> np.ndarray:
    pairs = _pairs(pairs)
    s = simrank_matrix(g, cfg)
    return s[pairs[:, 0], pairs[:, 1]]


SCORERS = {
    "katz": katz_scores,
    "pagerank": rooted_pagerank_scores,
    "simrank": simrank_scores,
}


def write_scores(fh: TextIO, pairs, scores, method: str, node_ids=None) -> None:
    """CSV rows ``u,v,method,score`` using original node ids when given."""
    w = csv.writer(fh)
    w.writerow(["u", "v", "method", "score"])
    for (u, v), s in zip(_pairs(pairs).tolist(), np.asarray(scores).tolist()):
        if node_ids is not None:
            u, v = int(node_ids[u]), int(node_ids[v])
        w.writerow([u, v, method, repr(float(s))])
