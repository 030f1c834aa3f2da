"""Independent reference implementations used as test oracles.

None of these call into the code paths they check: distances come from dense
Floyd-Warshall, line graphs from pair enumeration, Katz from a dense inverse,
metrics from explicit loops.
"""

import itertools
import math

import numpy as np


def dense_adjacency(edges, n):
    a = np.zeros((n, n))
    for u, v in edges:
        a[u, v] = a[v, u] = 1.0
    return a


def floyd_warshall(a):
    n = a.shape[0]
    d = np.where(a > 0, 1.0, np.inf)
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


def random_edges(rng, n, p):
    return [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]


def line_graph_bruteforce(edges):
    """Node count and the set of adjacent edge-index pairs, by enumeration."""
    edges = [tuple(sorted(e)) for e in edges]
    adj = set()
    for i, j in itertools.combinations(range(len(edges)), 2):
        if set(edges[i]) & set(edges[j]):
            adj.add((i, j))
    return len(edges), adj


def drnl_literal(d1, d2, cap):
    """Double-radius label straight from the closed form."""
    if d1 == math.inf or d2 == math.inf:
        return 0
    ds = int(d1 + d2)
    q, r = ds // 2, ds % 2
    f = 1 + min(int(d1), int(d2)) + q * (q + r - 1)
    return 0 if f >= cap else f


def enclosing_nodes_bruteforce(dist, u, v, h):
    return {w for w in range(dist.shape[0]) if min(dist[w, u], dist[w, v]) <= h}


def auc_bruteforce(pos, neg):
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def ap_direct(scores, labels):
    """Precision-recall summation over a stable descending ranking."""
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    n_pos = sum(1 for y in labels if y)
    tp = 0
    total = 0.0
    for k, i in enumerate(order, start=1):
        if labels[i]:
            tp += 1
            total += (tp / k) * (1.0 / n_pos)
    return total


def katz_dense(a, beta):
    n = a.shape[0]
    return np.linalg.inv(np.eye(n) - beta * a) - np.eye(n)


def katz_walks(a, beta, max_len):
    s = np.zeros_like(a)
    p = np.eye(a.shape[0])
    for l in range(1, max_len + 1):
        p = p @ a
        s += beta ** l * p
    return s


def rooted_pagerank_solve(a, root, alpha):
    """Stationary restart-at-root distribution by a direct linear solve."""
    n = a.shape[0]
    deg = a.sum(axis=1)
    p = np.divide(a, deg[:, None], out=np.zeros_like(a), where=deg[:, None] > 0)
    e = np.zeros(n)
    e[root] = 1.0 - alpha
    return np.linalg.solve(np.eye(n) - alpha * p.T, e)


def central_diff(f, x, eps=1e-5):
    """Numerical gradient of scalar ``f`` w.r.t. array ``x`` (modified in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + eps
        fp = f()
        x[idx] = old - eps
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * eps)
    return g


def rel_error(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max(), 1e-12))
