"""Graph-convolution classifier over line graphs of enclosing subgraphs."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as ssp

from .autodiff import Param, Tape, Var, adam_step, load_params, save_params, softmax, \
    softmax_cross_entropy
from .errors import ConfigError, DataError
from .graph import Graph
from .linegraph import LineGraph, to_line_graph
from .metrics import evaluate
from .split import DataSplit
from .subgraph import DEFAULT_LABEL_CAP, labeled_subgraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelConfig:
    num_layers: int = 3
    channels: int = 32
    mlp_hidden: int = 128
    dropout: float = 0.5
    hops: int = 2
    label_cap: int = DEFAULT_LABEL_CAP
    attr_dim: int = 0
    max_subgraph_nodes: int | None = None

    def __post_init__(self):
        if self.num_layers < 1:
            raise ConfigError("num_layers must be >= 1")
        if self.channels < 1 or self.mlp_hidden < 1:
            raise ConfigError("layer widths must be positive")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.label_cap < 2:
            raise ConfigError("label_cap must be >= 2")
        if self.hops < 1:
            raise ConfigError("hops must be >= 1")

    @property
    def input_dim(self) -> int:
        return 2 * self.label_cap + self.attr_dim


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 15
    batch_size: int = 50
    lr: float = 1e-4
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")


@dataclass
class Batch:
    adjacency: ssp.csr_matrix
    beta: np.ndarray
    x: np.ndarray
    targets: np.ndarray


def collate(graphs: Sequence[LineGraph]) -> Batch:
    """Stack line graphs into one block-diagonal batch."""
    sizes = np.array([lg.num_nodes for lg in graphs])
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    adj = ssp.block_diag([lg.adjacency for lg in graphs], format="csr")
    deg = np.diff(adj.indptr).astype(np.float64)
    x = np.concatenate([lg.node_attrs for lg in graphs])
    targets = offsets + np.array([lg.target_index for lg in graphs])
    return Batch(adj, 1.0 / (1.0 + deg), x, targets)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class LGLPModel:
    """Stack of line-graph convolutions plus a two-layer classifier head."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        c = config
        widths = [c.input_dim] + [c.channels] * c.num_layers
        self.conv = [Param(_glorot(rng, widths[k], widths[k + 1]), f"conv{k}")
                     for k in range(c.num_layers)]
        readout = c.num_layers * c.channels
        self.w1 = Param(_glorot(rng, readout, c.mlp_hidden), "head_w1")
        self.b1 = Param(np.zeros((1, c.mlp_hidden)), "head_b1")
        self.w2 = Param(_glorot(rng, c.mlp_hidden, 2), "head_w2")
        self.b2 = Param(np.zeros((1, 2)), "head_b2")

    @property
    def params(self) -> list[Param]:
        return [*self.conv, self.w1, self.b1, self.w2, self.b2]

    def num_parameters(self) -> int:
        return int(sum(p.value.size for p in self.params))

    def logits(self, tape: Tape, batch: Batch, train: bool = False,
               rng: np.random.Generator | None = None) -> Var:
        if batch.x.shape[1] != self.config.input_dim:
            raise DataError(f"line-graph attribute width {batch.x.shape[1]} "
                            f"!= model input width {self.config.input_dim}")
        z = tape.const(batch.x)
        layers = []
        for w in self.conv:
            z = tape.tanh(tape.matmul(tape.aggregate(batch.adjacency, batch.beta, z),
                                      tape.param(w)))
            layers.append(tape.row_gather(z, batch.targets))
        h = tape.concat_cols(*layers)
        h = tape.relu(tape.add_row(tape.matmul(h, tape.param(self.w1)), tape.param(self.b1)))
        rate = self.config.dropout
        if train and rate > 0:
            if rng is None:
                raise ValueError("training-mode forward needs an rng for dropout")
            keep = (rng.random(h.shape) >= rate) / (1.0 - rate)
            h = tape.mask(h, keep)
        return tape.add_row(tape.matmul(h, tape.param(self.w2)), tape.param(self.b2))

    def loss_and_grad(self, batch: Batch, labels: np.ndarray, train: bool = False,
                      rng: np.random.Generator | None = None) -> float:
        """Mean cross-entropy on ``batch``; accumulates into each ``Param.grad``."""
        tape = Tape()
        out = self.logits(tape, batch, train, rng)
        loss, grad = softmax_cross_entropy(out.value, labels)
        tape.backward(out, grad)
        return loss

    def save(self, directory: str | Path, extra: dict | None = None) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        save_params(self.params, d / "params.npz")
        meta = {"model_config": asdict(self.config), "seed": self.seed,
                "label_cap": self.config.label_cap, "attr_dim": self.config.attr_dim}
        if extra:
            meta.update(extra)
        (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))

    @classmethod
    def load(cls, directory: str | Path) -> "LGLPModel":
        d = Path(directory)
        try:
            meta = json.loads((d / "meta.json").read_text())
            stored = load_params(d / "params.npz")
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load checkpoint {d}: {exc}") from exc
        model = cls(ModelConfig(**meta["model_config"]), meta["seed"])
        for p in model.params:
            src = stored[p.name]
            if src.shape != p.shape:
                raise DataError(f"checkpoint {p.name} has shape {src.shape}, expected {p.shape}")
            p.value, p.adam_m, p.adam_v, p.step_count = (
                src.value, src.adam_m, src.adam_v, src.step_count)
        return model


def forward(model: LGLPModel, lg: LineGraph) -> np.ndarray:
    """Evaluation-mode logit pair for the target node of one line graph."""
    return model.logits(Tape(), collate([lg])).value[0]


def line_graph_for(g: Graph, u: int, v: int, cfg: ModelConfig) -> LineGraph:
    """Extract, label and transform the enclosing subgraph of ``(u, v)``."""
    sub = labeled_subgraph(g, u, v, cfg.hops, cfg.label_cap, cfg.max_subgraph_nodes)
    return to_line_graph(sub, cfg.label_cap)


def _prepare_chunk(args) -> list[LineGraph]:
    g, pairs, cfg = args
    return [line_graph_for(g, u, v, cfg) for u, v in pairs]


def prepare(g: Graph, pairs, cfg: ModelConfig, workers: int = 1) -> list[LineGraph]:
    """Line graphs for every pair, optionally fanned out over processes."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2).tolist()
    if workers <= 1 or len(pairs) < 2 * workers:
        return _prepare_chunk((g, pairs, cfg))
    size = -(-len(pairs) // (4 * workers))
    chunks = [(g, pairs[i:i + size], cfg) for i in range(0, len(pairs), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [lg for part in pool.map(_prepare_chunk, chunks) for lg in part]


def score_line_graphs(model: LGLPModel, graphs: Sequence[LineGraph],
                      batch_size: int = 256) -> np.ndarray:
    """Positive-class probabilities in evaluation mode."""
    out = np.empty(len(graphs))
    for lo in range(0, len(graphs), batch_size):
        batch = collate(graphs[lo:lo + batch_size])
        out[lo:lo + batch_size] = softmax(model.logits(Tape(), batch).value)[:, 1]
    return out


def predict(model: LGLPModel, g: Graph, pairs, hops: int | None = None,
            workers: int = 1) -> np.ndarray:
    """Probability of a link for every pair, via the full extraction pipeline."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if (pairs[:, 0] == pairs[:, 1]).any():
        raise DataError("pair with identical endpoints")
    cfg = model.config
    if hops is not None and hops != cfg.hops:
        cfg = ModelConfig(**{**asdict(cfg), "hops": hops})
    canon = np.sort(pairs, axis=1)
    return score_line_graphs(model, prepare(g, canon, cfg, workers))


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    test_auc: float | None = None
    test_ap: float | None = None
    seconds: float = 0.0


@dataclass
class TrainResult:
    model: LGLPModel
    history: list[EpochStats] = field(default_factory=list)

    def __iter__(self):
        return iter((self.model, self.history))


def train(split: DataSplit, mcfg: ModelConfig, tcfg: TrainConfig = TrainConfig(),
          model_seed: int | None = None,
          on_epoch: Callable[[EpochStats], None] | None = None) -> TrainResult:
    """Mini-batch Adam on the training pairs of ``split``.

    Subgraphs are extracted once and reused across epochs.  After each epoch
    the test pairs are scored and AUC/AP recorded.
    """
    train_pairs, train_y = split.train_pairs()
    if train_y.size == 0:
        raise DataError("empty training set")
    if train_y.min() == train_y.max():
        raise DataError("training set contains a single class")
    if split.observed.attr_dim != mcfg.attr_dim:
        raise ConfigError(f"model expects attr_dim={mcfg.attr_dim}, "
                          f"graph has {split.observed.attr_dim}")
    g = split.observed
    t0 = time.perf_counter()
    train_lgs = prepare(g, train_pairs, mcfg, tcfg.workers)
    test_pairs, test_y = split.test_pairs()
    test_lgs = prepare(g, test_pairs, mcfg, tcfg.workers) if test_y.size else []
    log.info("prepared %d train / %d test line graphs in %.1fs",
             len(train_lgs), len(test_lgs), time.perf_counter() - t0)
    return fit(train_lgs, train_y, test_lgs, test_y, test_pairs, mcfg, tcfg,
               model_seed, on_epoch)


def fit(train_lgs: Sequence[LineGraph], train_y: np.ndarray,
        test_lgs: Sequence[LineGraph], test_y: np.ndarray, test_pairs: np.ndarray,
        mcfg: ModelConfig, tcfg: TrainConfig, model_seed: int | None = None,
        on_epoch: Callable[[EpochStats], None] | None = None) -> TrainResult:
    """Training loop over pre-built line graphs."""
    train_y = np.asarray(train_y, dtype=np.int64)
    model = LGLPModel(mcfg, tcfg.seed if model_seed is None else model_seed)
    rng = np.random.default_rng([tcfg.seed, 7])
    result = TrainResult(model)
    n = len(train_lgs)
    for epoch in range(1, tcfg.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, tcfg.batch_size):
            idx = order[lo:lo + tcfg.batch_size]
            batch = collate([train_lgs[i] for i in idx])
            loss = model.loss_and_grad(batch, train_y[idx], train=True, rng=rng)
            adam_step(model.params, tcfg.lr)
            total += loss * idx.size
        stats = EpochStats(epoch, total / n)
        if len(test_lgs):
            scores = score_line_graphs(model, test_lgs)
            ev = evaluate(test_pairs, scores, test_y)
            stats.test_auc, stats.test_ap = ev.auc, ev.ap
        stats.seconds = time.perf_counter() - t0
        log.info("epoch %d loss %.4f auc %s", epoch, stats.train_loss, stats.test_auc)
        result.history.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
    return result
