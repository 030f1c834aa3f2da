"""Command-line entry point.

Every flag can also be set through an environment variable named after it
with an ``LGLP_`` prefix (``--train-frac`` -> ``LGLP_TRAIN_FRAC``); explicit
flags win.  Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .datasets import load_dataset
from .errors import ConfigError, DataError
from .experiments import (METHODS, ExperimentConfig, make_split, run, sweep, train_once,
                          write_report)
from .heuristics import SCORERS, HeuristicConfig, write_scores
from .metrics import evaluate
from .model import LGLPModel, ModelConfig, TrainConfig, predict
from .split import dump_split, dumps_split, load_split

ENV_PREFIX = "LGLP_"
EXIT_CONFIG = 2
EXIT_DATA = 3


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _opt_int(text: str) -> int | None:
    return None if text.lower() in ("", "none", "0") else int(text)


def _common(p: argparse.ArgumentParser, method: bool = True) -> None:
    p.add_argument("--dataset", required=True,
                   help="edge-list file or generator spec, e.g. planted:n=200,k=20,p_in=0.7,p_out=0.003")
    p.add_argument("--attrs", help="comma-separated node attribute file")
    if method:
        p.add_argument("--method", default="lglp", choices=METHODS)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--deterministic", action="store_true",
                   help="force single-worker execution everywhere")


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hops", type=int, default=2)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--label-cap", type=int, default=32)
    p.add_argument("--max-subgraph-nodes", type=_opt_int, default=None)
    p.add_argument("--katz-beta", type=float, default=0.001)
    p.add_argument("--pr-damping", type=float, default=0.85)
    p.add_argument("--simrank-c", type=float, default=0.8)
    p.add_argument("--no-figures", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lglp", description="Line-graph link prediction toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one LGLP model and save a checkpoint")
    _common(p, method=False)
    _model_flags(p)
    p.add_argument("--split", help="split file from `split dump`")

    p = sub.add_parser("eval", help="score the test pairs of a split")
    _common(p)
    _model_flags(p)
    p.add_argument("--split", help="split file from `split dump`")
    p.add_argument("--checkpoint", help="checkpoint directory (method lglp)")

    p = sub.add_parser("benchmark", help="repeated split/train/evaluate with a report")
    _common(p)
    _model_flags(p)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--split", help="split file (implies --repeats 1)")

    p = sub.add_parser("sweep", help="benchmark across training fractions")
    _common(p)
    _model_flags(p)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--fractions", type=_floats, default=[0.3, 0.4, 0.5, 0.6, 0.7, 0.8])

    p = sub.add_parser("split", help="dump or load data splits")
    ssub = p.add_subparsers(dest="split_command", required=True)
    d = ssub.add_parser("dump", help="write a split record")
    _common(d, method=False)
    lo = ssub.add_parser("load", help="validate a split record and print a summary")
    lo.add_argument("file")
    lo.add_argument("--dataset", help="original graph, to check negatives against")

    _apply_env(parser)
    return parser


def _apply_env(parser: argparse.ArgumentParser) -> None:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                _apply_env(child)
            continue
        if not action.option_strings or action.dest == "help":
            continue
        raw = os.environ.get(ENV_PREFIX + action.dest.upper())
        if raw is None:
            continue
        if action.nargs == 0:
            action.default = raw.lower() in ("1", "true", "yes", "on")
        else:
            conv = action.type or str
            try:
                action.default = conv(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"{ENV_PREFIX}{action.dest.upper()}={raw!r}: {exc}") from exc
            action.required = False


def _experiment_config(args, g=None) -> ExperimentConfig:
    workers = 1 if args.deterministic else args.workers
    model = ModelConfig(hops=args.hops, label_cap=args.label_cap,
                        max_subgraph_nodes=args.max_subgraph_nodes,
                        attr_dim=0 if g is None else g.attr_dim)
    tcfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
                       seed=args.seed, workers=workers)
    heur = HeuristicConfig(katz_beta=args.katz_beta, pr_damping=args.pr_damping,
                           simrank_c=args.simrank_c)
    split_file = getattr(args, "split", None)
    repeats = getattr(args, "repeats", 1)
    if split_file is not None:
        repeats = 1
    return ExperimentConfig(
        dataset=args.dataset, method=getattr(args, "method", "lglp"),
        train_frac=args.train_frac, repeats=repeats, seed=args.seed, out=args.out,
        attrs=args.attrs, split_file=split_file, workers=workers,
        figures=not args.no_figures, model=model, train=tcfg, heuristic=heur)


def cmd_train(args) -> int:
    g = load_dataset(args.dataset, args.attrs)
    cfg = _experiment_config(args, g)
    model, split, report = train_once(cfg, g)
    print(report.summary_line())
    if args.out:
        out = Path(args.out)
        model.save(out / "checkpoint", extra={"config": cfg.to_dict(),
                                              "split_digest": split.digest()})
        dump_split(split, out / "split.json")
        write_report(report, out, figures=cfg.figures)
    return 0


def cmd_eval(args) -> int:
    g = load_dataset(args.dataset, args.attrs)
    cfg = _experiment_config(args, g)
    split = make_split(cfg, g)
    pairs, labels = split.test_pairs()
    if cfg.method == "lglp":
        if not args.checkpoint:
            raise ConfigError("method lglp needs --checkpoint")
        model = LGLPModel.load(args.checkpoint)
        scores = predict(model, split.observed, pairs, workers=cfg.workers)
    else:
        scores = SCORERS[cfg.method](split.observed, pairs, cfg.heuristic)
    ev = evaluate(pairs, scores, labels)
    print(json.dumps(ev.to_dict()))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval.json").write_text(json.dumps(ev.to_dict(), indent=2) + "\n")
        with open(out / "scores.csv", "w", newline="") as fh:
            write_scores(fh, pairs, scores, cfg.method, g.node_ids)
    return 0


def cmd_benchmark(args) -> int:
    g = load_dataset(args.dataset, args.attrs)
    report = run(_experiment_config(args, g), g)
    print(report.summary_line())
    return 0


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args)
    for r in sweep(cfg, args.fractions):
        print(r.summary_line())
    return 0


def cmd_split(args) -> int:
    if args.split_command == "dump":
        g = load_dataset(args.dataset, args.attrs)
        split = make_split(_experiment_config_for_split(args), g)
        if args.out:
            dump_split(split, args.out)
        else:
            print(dumps_split(split))
        return 0
    g = load_dataset(args.dataset) if args.dataset else None
    split = load_split(args.file, g)
    if g is not None:
        for name in ("train_neg", "test_neg"):
            for u, v in getattr(split, name).tolist():
                if g.has_edge(u, v):
                    raise DataError(f"{name} pair ({u}, {v}) is an edge of the graph")
    print(json.dumps({
        "seed": split.seed, "train_frac": split.train_frac,
        "num_nodes": split.observed.num_nodes,
        "train_pos": len(split.train_pos), "train_neg": len(split.train_neg),
        "test_pos": len(split.test_pos), "test_neg": len(split.test_neg),
        "sha256": split.digest(),
    }))
    return 0


def _experiment_config_for_split(args) -> ExperimentConfig:
    return ExperimentConfig(dataset=args.dataset, train_frac=args.train_frac, seed=args.seed,
                            repeats=1)


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "benchmark": cmd_benchmark,
            "sweep": cmd_sweep, "split": cmd_split}


def main(argv: list[str] | None = None) -> int:
    try:
        parser = build_parser()
    except ConfigError as exc:
        print(f"lglp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"lglp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"lglp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
