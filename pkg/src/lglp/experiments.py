"""Benchmark runner: repeated splits, training/scoring, aggregated reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .datasets import load_dataset, reference_size
from .errors import ConfigError
from .graph import Graph
from .heuristics import SCORERS, HeuristicConfig
from .metrics import EvalResult, evaluate
from .model import LGLPModel, ModelConfig, TrainConfig, TrainResult, train
from .split import DataSplit, load_split, split_links

log = logging.getLogger(__name__)

METHODS = ("lglp", *SCORERS)
MODEL_SEED_OFFSET = 1000
HISTORY_COLUMNS = ("epoch", "train_loss", "test_auc")
CURVE_COLUMNS = ("fraction", "mean_auc", "std_auc", "mean_ap", "std_ap")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    method: str = "lglp"
    train_frac: float = 0.8
    repeats: int = 10
    seed: int = 0
    out: str | None = None
    attrs: str | None = None
    split_file: str | None = None
    workers: int = 1
    figures: bool = True
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not 0 < self.train_frac < 1:
            raise ConfigError(f"train_frac must be in (0, 1), got {self.train_frac}")
        if self.split_file is not None and self.repeats != 1:
            raise ConfigError("a fixed split file implies repeats=1")

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.method == "lglp":
            d.pop("heuristic")
        else:
            d.pop("model")
            d.pop("train")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["model"] = ModelConfig(**d.get("model", {}))
        d["train"] = TrainConfig(**d.get("train", {}))
        d["heuristic"] = HeuristicConfig(**d.get("heuristic", {}))
        return cls(**d)


@dataclass
class RepeatResult:
    repeat: int
    split_seed: int
    model_seed: int | None
    split_digest: str
    result: EvalResult
    seconds: float
    history: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["result"] = self.result.to_dict()
        return d


@dataclass
class Report:
    config: dict
    dataset: dict
    repeats: list[RepeatResult]
    mean_auc: float
    std_auc: float
    mean_ap: float
    std_ap: float
    wall_clock: float
    history: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["repeats"] = [r.to_dict() for r in self.repeats]
        return d

    def body(self) -> dict:
        """Report content without timing fields, for reproducibility checks."""
        d = self.to_dict()
        d.pop("wall_clock")
        for r in d["repeats"]:
            r.pop("seconds")
            for h in r["history"]:
                h.pop("seconds", None)
        for h in d["history"]:
            h.pop("seconds", None)
        return d

    def summary_line(self) -> str:
        return (f"{self.config['method']} {self.dataset['name']} frac={self.config['train_frac']}"
                f" AUC {100 * self.mean_auc:.2f}(±{100 * self.std_auc:.2f})"
                f" AP {100 * self.mean_ap:.2f}(±{100 * self.std_ap:.2f})")


def dataset_info(name: str, g: Graph) -> dict:
    info = {"name": name, "num_nodes": g.num_nodes, "num_edges": g.num_edges,
            "sha256": g.fingerprint()}
    ref = reference_size(name)
    if ref is not None:
        info["reference_size"] = list(ref)
        info["matches_reference"] = ref == (g.num_nodes, g.num_edges)
    if g.node_ids is not None:
        info["node_ids"] = g.node_ids.tolist()
    return info


def _repeat_from_training(i: int, split: DataSplit, model_seed: int, res: TrainResult,
                          t0: float) -> RepeatResult:
    _, labels = split.test_pairs()
    last = res.history[-1]
    ev = EvalResult(last.test_auc, last.test_ap, int(labels.sum()), int((1 - labels).sum()))
    return RepeatResult(i, split.seed, model_seed, split.digest(), ev,
                        time.perf_counter() - t0, [asdict(h) for h in res.history])


def _train_split(cfg: ExperimentConfig, g: Graph, split: DataSplit, model_seed: int,
                 workers: int = 1) -> TrainResult:
    tcfg = replace(cfg.train, seed=split.seed, workers=workers)
    mcfg = replace(cfg.model, attr_dim=g.attr_dim)
    return train(split, mcfg, tcfg, model_seed=model_seed)


def _run_repeat(args) -> RepeatResult:
    cfg, g, i, workers = args
    t0 = time.perf_counter()
    if cfg.split_file is not None:
        split = load_split(cfg.split_file, g)
    else:
        split = split_links(g, cfg.train_frac, cfg.seed + i)
    if cfg.method == "lglp":
        model_seed = cfg.seed + MODEL_SEED_OFFSET + i
        rep = _repeat_from_training(i, split, model_seed, _train_split(cfg, g, split, model_seed, workers),
                                    t0)
    else:
        pairs, labels = split.test_pairs()
        scores = SCORERS[cfg.method](split.observed, pairs, cfg.heuristic)
        rep = RepeatResult(i, split.seed, None, split.digest(), evaluate(pairs, scores, labels),
                           time.perf_counter() - t0)
    log.info("repeat %d: auc %.4f ap %.4f", i, rep.result.auc, rep.result.ap)
    return rep


def _assemble(cfg: ExperimentConfig, g: Graph, repeats: list[RepeatResult],
              t0: float) -> Report:
    aucs = np.array([r.result.auc for r in repeats])
    aps = np.array([r.result.ap for r in repeats])
    return Report(cfg.to_dict(), dataset_info(cfg.dataset, g), repeats,
                  float(aucs.mean()), float(aucs.std()), float(aps.mean()), float(aps.std()),
                  time.perf_counter() - t0, _mean_history(repeats))


def run(cfg: ExperimentConfig, g: Graph | None = None) -> Report:
    """Run ``cfg.repeats`` independent split/train/evaluate rounds.

    Repeat ``i`` splits with ``seed + i`` and initialises the model with
    ``seed + 1000 + i``.  Writes the report files when ``cfg.out`` is set.
    """
    t0 = time.perf_counter()
    if g is None:
        g = load_dataset(cfg.dataset, cfg.attrs)
    if cfg.workers > 1 and cfg.repeats > 1:
        jobs = [(cfg, g, i, 1) for i in range(cfg.repeats)]
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.repeats)) as pool:
            repeats = list(pool.map(_run_repeat, jobs))
    else:
        repeats = [_run_repeat((cfg, g, i, cfg.workers)) for i in range(cfg.repeats)]
    report = _assemble(cfg, g, repeats, t0)
    if cfg.out is not None:
        write_report(report, cfg.out, figures=cfg.figures)
    return report


def train_once(cfg: ExperimentConfig, g: Graph) -> tuple[LGLPModel, DataSplit, Report]:
    """Train a single model on the split described by ``cfg`` (first repeat)."""
    t0 = time.perf_counter()
    split = make_split(cfg, g)
    model_seed = cfg.seed + MODEL_SEED_OFFSET
    res = _train_split(cfg, g, split, model_seed, cfg.workers)
    report = _assemble(cfg, g, [_repeat_from_training(0, split, model_seed, res, t0)], t0)
    return res.model, split, report


def _mean_history(repeats: Sequence[RepeatResult]) -> list[dict]:
    if not repeats or not repeats[0].history:
        return []
    rows = []
    for e in range(len(repeats[0].history)):
        hs = [r.history[e] for r in repeats]
        rows.append({
            "epoch": hs[0]["epoch"],
            "train_loss": float(np.mean([h["train_loss"] for h in hs])),
            "test_auc": float(np.mean([h["test_auc"] for h in hs])),
        })
    return rows


def history_dump(report: Report) -> str:
    """CSV of per-epoch ``epoch,train_loss,test_auc`` (averaged over repeats)."""
    if not report.history:
        raise ConfigError(f"method {report.config['method']!r} has no training history")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_COLUMNS)
    for h in report.history:
        w.writerow([h["epoch"], repr(h["train_loss"]), repr(h["test_auc"])])
    return buf.getvalue()


def write_report(report: Report, out: str | Path, figures: bool = True) -> Path:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    with open(d / "repeats.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["repeat", "split_seed", "model_seed", "auc", "ap", "n_pos", "n_neg"])
        for r in report.repeats:
            w.writerow([r.repeat, r.split_seed, "" if r.model_seed is None else r.model_seed,
                        repr(r.result.auc), repr(r.result.ap), r.result.n_pos, r.result.n_neg])
    if report.history:
        (d / "history.csv").write_text(history_dump(report))
        if figures:
            from .plotting import plot_history
            plot_history(report.history, d / "convergence.png",
                         title=f"{report.dataset['name']} ({report.config['method']})")
    return d


def sweep(cfg: ExperimentConfig, fractions: Sequence[float]) -> list[Report]:
    """One :func:`run` per training fraction plus a combined curve file."""
    if len(fractions) == 0:
        raise ConfigError("empty fraction list")
    for f in fractions:
        if not 0 < f < 1:
            raise ConfigError(f"fraction {f} outside (0, 1)")
    g = load_dataset(cfg.dataset, cfg.attrs)
    reports = []
    for f in fractions:
        sub_out = None if cfg.out is None else str(Path(cfg.out) / f"frac_{f:g}")
        reports.append(run(replace(cfg, train_frac=f, out=sub_out), g))
    if cfg.out is not None:
        d = Path(cfg.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "curve.csv").write_text(curve_csv(reports))
        if cfg.figures:
            from .plotting import plot_sweep
            plot_sweep(curve_rows(reports), d / "sweep.png",
                       label=cfg.method, title=str(cfg.dataset))
    return reports


def curve_rows(reports: Sequence[Report]) -> list[dict]:
    return [{"fraction": r.config["train_frac"], "mean_auc": r.mean_auc, "std_auc": r.std_auc,
             "mean_ap": r.mean_ap, "std_ap": r.std_ap} for r in reports]


def curve_csv(reports: Sequence[Report]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CURVE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in curve_rows(reports):
        w.writerow({k: repr(v) for k, v in row.items()})
    return buf.getvalue()


def make_split(cfg: ExperimentConfig, g: Graph) -> DataSplit:
    if cfg.split_file is not None:
        return load_split(cfg.split_file, g)
    return split_links(g, cfg.train_frac, cfg.seed)


