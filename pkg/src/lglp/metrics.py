"""Ranking metrics: ROC AUC and average precision."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class EvalResult:
    auc: float
    ap: float
    n_pos: int
    n_neg: int

    def to_dict(self) -> dict:
        return asdict(self)


def auc(pos_scores, neg_scores) -> float:
    """Mann-Whitney AUC; tied scores count one half, via average ranks."""
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("auc needs at least one positive and one negative score")
    ranks = rankdata(np.concatenate([pos, neg]), method="average")
    u = ranks[:pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def average_precision(scores, labels) -> float:
    """Sum of precision@k times the recall increment over the descending ranking.

    Ties keep their input order (stable sort), so callers pass samples in a
    canonical order to make the result reproducible.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    if s.size != y.size:
        raise ValueError(f"{s.size} scores for {y.size} labels")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive")
    order = np.argsort(-s, kind="stable")
    hits = y[order]
    precision = np.cumsum(hits) / np.arange(1, hits.size + 1)
    return float(precision[hits].sum() / n_pos)


def evaluate(pairs: np.ndarray, scores, labels) -> EvalResult:
    """AUC and AP for scored pairs, tie order fixed by canonical pair order."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    canon = np.sort(pairs, axis=1)
    order = np.lexsort((canon[:, 1], canon[:, 0]))
    s, y = s[order], y[order]
    return EvalResult(auc(s[y], s[~y]), average_precision(s, y), int(y.sum()), int((~y).sum()))
