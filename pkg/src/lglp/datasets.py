"""Dataset loading: edge-list files or built-in synthetic generators.

A dataset is named either by a file path or by a generator spec such as
``planted:n=200,k=4,p_in=0.3,p_out=0.01,seed=0``.
"""

from __future__ import annotations

from pathlib import Path

import networkx as nx
import numpy as np

from .errors import DataError
from .graph import Graph, build_graph, read_edge_list

GENERATORS = ("er", "ba", "planted")

# Published (nodes, links) of the standard plain-graph benchmarks, keyed by
# lower-case file stem.
REFERENCE_SIZES = {
    "bup": (105, 441), "c.ele": (297, 2148), "celegans": (297, 2148),
    "usair": (332, 2126), "smg": (1024, 4916), "eml": (1133, 5451),
    "nsc": (1461, 2742), "yst": (2284, 6646), "power": (4941, 6594),
    "khn": (3772, 12718), "adv": (5155, 39285), "grq": (5241, 14484),
    "ldg": (8324, 41532), "hpd": (8756, 32331), "zwl": (6651, 54182),
}


def erdos_renyi(n: int, p: float, seed: int = 0) -> Graph:
    return _from_nx(nx.gnp_random_graph(n, p, seed=seed))


def barabasi_albert(n: int, m: int, seed: int = 0) -> Graph:
    return _from_nx(nx.barabasi_albert_graph(n, m, seed=seed))


def planted_partition(n: int, k: int, p_in: float, p_out: float, seed: int = 0) -> Graph:
    """``k`` near-equal blocks; dense inside blocks, sparse across."""
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    return _from_nx(nx.random_partition_graph(sizes, p_in, p_out, seed=seed))


def _from_nx(h: nx.Graph) -> Graph:
    edges = np.array(list(h.edges()), dtype=np.int64).reshape(-1, 2)
    return build_graph(edges, h.number_of_nodes())


def _parse_params(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, text.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise DataError(f"bad generator parameter {item!r}")
        out[key.strip()] = float(val)
    return out


def generate(spec: str) -> Graph:
    kind, _, rest = spec.partition(":")
    p = _parse_params(rest)
    seed = int(p.pop("seed", 0))
    try:
        if kind == "er":
            return erdos_renyi(int(p["n"]), p["p"], seed)
        if kind == "ba":
            return barabasi_albert(int(p["n"]), int(p["m"]), seed)
        if kind == "planted":
            return planted_partition(int(p["n"]), int(p.get("k", 2)), p["p_in"], p["p_out"], seed)
    except KeyError as exc:
        raise DataError(f"generator {kind!r} needs parameter {exc}") from exc
    raise DataError(f"unknown generator {kind!r}")


def load_dataset(name: str, attrs: str | None = None) -> Graph:
    """Read an edge-list file, or build a synthetic graph from a generator spec."""
    path = Path(name)
    if path.exists():
        return read_edge_list(path, attrs)
    if name.split(":", 1)[0] in GENERATORS:
        return generate(name)
    raise DataError(f"dataset not found: {name}")


def reference_size(name: str) -> tuple[int, int] | None:
    """Published size for a dataset file, matched on its stem."""
    stem = Path(name).name.lower()
    for suffix in (".txt", ".mat", ".edges", ".csv"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    return REFERENCE_SIZES.get(stem)
