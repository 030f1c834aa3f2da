"""Train/test link splits with uniform negative sampling."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .graph import Graph, build_graph

MAX_DENSITY = 0.5


@dataclass(frozen=True)
class LinkSample:
    u: int
    v: int
    label: int

    def __post_init__(self):
        if self.u == self.v:
            raise DataError(f"link sample with identical endpoints {self.u}")
        if self.u > self.v:
            lo, hi = self.v, self.u
            object.__setattr__(self, "u", lo)
            object.__setattr__(self, "v", hi)


@dataclass(eq=False)
class DataSplit:
    """Positive/negative train and test pairs plus the observed graph.

    Pair lists are ``(k, 2)`` int arrays in canonical ``u < v`` order.
    ``observed`` holds exactly the training positives.
    """

    observed: Graph
    train_pos: np.ndarray
    train_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    seed: int
    train_frac: float

    def train_samples(self) -> Iterator[LinkSample]:
        yield from _samples(self.train_pos, 1)
        yield from _samples(self.train_neg, 0)

    def test_samples(self) -> Iterator[LinkSample]:
        yield from _samples(self.test_pos, 1)
        yield from _samples(self.test_neg, 0)

    def train_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return _stack(self.train_pos, self.train_neg)

    def test_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return _stack(self.test_pos, self.test_neg)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "train_frac": self.train_frac,
            "num_nodes": self.observed.num_nodes,
            "train_pos": self.train_pos.tolist(),
            "train_neg": self.train_neg.tolist(),
            "test_pos": self.test_pos.tolist(),
            "test_neg": self.test_neg.tolist(),
        }

    def digest(self) -> str:
        return hashlib.sha256(dumps_split(self).encode()).hexdigest()


def _samples(pairs: np.ndarray, label: int) -> Iterator[LinkSample]:
    for u, v in pairs.tolist():
        yield LinkSample(u, v, label)


def _stack(pos: np.ndarray, neg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pairs = np.concatenate([pos, neg]).reshape(-1, 2)
    labels = np.concatenate([np.ones(len(pos), np.int64), np.zeros(len(neg), np.int64)])
    return pairs, labels


def _pairs(a) -> np.ndarray:
    return np.asarray(a, dtype=np.int64).reshape(-1, 2)


def split_links(g: Graph, train_frac: float, seed: int) -> DataSplit:
    """Randomly split the edges of ``g`` and sample as many negatives.

    ``round(train_frac * m)`` edges become training positives, the rest test
    positives.  Negatives are drawn uniformly from non-edges of ``g`` (not just
    the observed graph) without replacement, disjoint across train and test.
    """
    if not 0.0 < train_frac < 1.0:
        raise ConfigError(f"train_frac must be in (0, 1), got {train_frac}")
    m = g.num_edges
    if m < 10:
        raise DataError(f"need at least 10 edges to split, graph has {m}")
    n = g.num_nodes
    total_pairs = n * (n - 1) // 2
    if m > MAX_DENSITY * total_pairs:
        raise DataError(f"graph density {m / total_pairs:.3f} too high for rejection sampling")

    rng = np.random.default_rng(seed)
    edges = g.edges()
    perm = rng.permutation(m)
    n_train = int(round(train_frac * m))
    train_pos = edges[np.sort(perm[:n_train])]
    test_pos = edges[np.sort(perm[n_train:])]

    need = len(train_pos) + len(test_pos)
    if need > total_pairs - m:
        raise DataError(f"requested {need} negatives but only {total_pairs - m} non-edges exist")
    neg = _sample_non_edges(g, need, rng)
    train_neg = neg[:len(train_pos)]
    test_neg = neg[len(train_pos):]

    observed = build_graph(train_pos, n, g.node_attrs, node_ids=g.node_ids)
    return DataSplit(observed, train_pos, _pairs(train_neg), test_pos, _pairs(test_neg),
                     int(seed), float(train_frac))


def _sample_non_edges(g: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    n = g.num_nodes
    existing = set((g.edges()[:, 0] * n + g.edges()[:, 1]).tolist())
    seen: set[int] = set()
    out: list[tuple[int, int]] = []
    while len(out) < count:
        batch = rng.integers(0, n, size=(2 * (count - len(out)) + 16, 2))
        for a, b in batch.tolist():
            if a == b:
                continue
            if a > b:
                a, b = b, a
            key = a * n + b
            if key in existing or key in seen:
                continue
            seen.add(key)
            out.append((a, b))
            if len(out) == count:
                break
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def sweep_fractions(g: Graph, fractions: Sequence[float], repeats: int,
                    base_seed: int) -> list[DataSplit]:
    """``repeats`` splits per fraction, repeat ``i`` seeded with ``base_seed + i``."""
    if len(fractions) == 0:
        raise ConfigError("empty fraction list")
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    return [split_links(g, f, base_seed + i) for f in fractions for i in range(repeats)]


def dumps_split(split: DataSplit) -> str:
    return json.dumps(split.to_dict(), separators=(",", ":"), sort_keys=True)


def dump_split(split: DataSplit, path: str | Path) -> None:
    Path(path).write_text(dumps_split(split) + "\n")


def load_split(path: str | Path, g: Graph | None = None) -> DataSplit:
    """Load a split written by :func:`dump_split`.

    The observed graph is rebuilt from the training positives; node attributes
    are taken from ``g`` when given.
    """
    try:
        rec = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read split {path}: {exc}") from exc
    try:
        n = int(rec["num_nodes"])
        train_pos = _pairs(rec["train_pos"])
        arrays = [_pairs(rec[k]) for k in ("train_neg", "test_pos", "test_neg")]
        seed, frac = int(rec["seed"]), float(rec["train_frac"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed split record {path}: {exc}") from exc
    if g is not None and g.num_nodes != n:
        raise DataError(f"split has {n} nodes but graph has {g.num_nodes}")
    attrs = None if g is None else g.node_attrs
    ids = None if g is None else g.node_ids
    observed = build_graph(train_pos, n, attrs, node_ids=ids)
    return DataSplit(observed, train_pos, *arrays, seed, frac)
