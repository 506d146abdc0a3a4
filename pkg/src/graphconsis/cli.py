"""Command-line entry point: generate, analyze, train, evaluate.

Configuration is a flat dotted-key map. Precedence: built-in defaults,
then the ``--config`` JSON file (nested objects are flattened), then
flags (``--set key=value`` overrides any key). Every run writes its fully
resolved config next to its outputs so it can be replayed exactly.

``GRAPHCONSIS_LOG`` (debug|info|warning|error) controls log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .baselines import METHODS
from .checkpoint import save_checkpoint
from .data import (
    RelationSpec,
    SplitSpec,
    SyntheticSpec,
    generate_synthetic,
    load_dataset_dir,
    save_dataset_dir,
    split_dataset,
)
from .estimators import ESTIMATORS, make_estimator
from .evaluation import RunSettings, run_experiment
from .graph import graph_stats
from .metrics import relation_report

logger = logging.getLogger("graphconsis")

DEFAULT_RELATIONS = [
    {"avg_degree": 4.0, "camouflage": 0.1, "homophily": 0.95,
     "fraud_source_fraction": 0.145, "camouflage_concentration": 0.0},
    {"avg_degree": 50.0, "camouflage": 0.9, "homophily": 0.10,
     "fraud_source_fraction": 0.25, "camouflage_concentration": 0.9},
    {"avg_degree": 120.0, "camouflage": 0.9, "homophily": 0.10,
     "fraud_source_fraction": 0.25, "camouflage_concentration": 0.9},
]

DEFAULTS: dict = {
    "seed": 0,
    "jobs": 0,  # 0 = number of available processors
    "dataset.kind": "synthetic",  # synthetic | files
    "dataset.path": None,
    "dataset.synthetic.num_nodes": 1000,
    "dataset.synthetic.fraud_fraction": 0.145,
    "dataset.synthetic.feature_dim": 100,
    "dataset.synthetic.class_separation": 1.3,
    "dataset.synthetic.class_axis_noise": 0.8,
    "dataset.synthetic.fraud_feature_camouflage": 0.6,
    "dataset.synthetic.num_clusters": 6,
    "dataset.synthetic.cluster_spread": 0.35,
    "dataset.synthetic.noise_scale": 0.02,
    "dataset.synthetic.mixing_jitter": 0.25,
    "dataset.synthetic.relations": DEFAULT_RELATIONS,
    "dataset.synthetic.seed": None,  # falls back to the global seed
    "model.num_layers": 2,
    "model.samples_per_layer": [10, 5],
    "model.hidden_widths": [200, 100],
    "model.epsilon": 0.01,
    "model.combine_mode": "concat",
    "train.method": "graphconsis",
    "train.epochs": 100,
    "train.learning_rate": 0.01,
    "train.num_forward_passes": 10,
    "train.train_fraction": 0.8,
    "train.stratified": True,
    "eval.methods": list(METHODS),
    "eval.train_fractions": [0.4, 0.6, 0.8],
    "eval.num_seeds": 5,
    "metrics.context_convention": "same-label",
    "metrics.feature_convention": "dim-normalized",
    "metrics.on_masked": "error",
}


def _flatten(obj, prefix: str = "") -> dict:
    out = {}
    for key, value in obj.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, dotted + "."))
        else:
            out[dotted] = value
    return out


def _parse_set(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults <- config file <- named flags <- --set overrides."""
    cfg = dict(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ValueError(f"config file {path} does not exist")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        for key, value in _flatten(loaded).items():
            if key not in DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            cfg[key] = value
    if args.seed is not None:
        cfg["seed"] = args.seed
    if getattr(args, "jobs", None) is not None:
        cfg["jobs"] = args.jobs
    if getattr(args, "epsilon", None) is not None:
        cfg["model.epsilon"] = args.epsilon
    if getattr(args, "method", None):
        methods = [m.strip() for m in args.method.split(",") if m.strip()]
        for m in methods:
            if m not in ESTIMATORS:
                raise ValueError(f"unknown method {m!r}; expected one of {sorted(ESTIMATORS)}")
        cfg["eval.methods"] = methods
        cfg["train.method"] = methods[0]
    if getattr(args, "train_fraction", None):
        fractions = [float(f) for f in args.train_fraction.split(",") if f.strip()]
        cfg["eval.train_fractions"] = fractions
        cfg["train.train_fraction"] = fractions[0]
    if getattr(args, "gamma_context_convention", None):
        cfg["metrics.context_convention"] = args.gamma_context_convention
    if getattr(args, "gamma_feature_convention", None):
        cfg["metrics.feature_convention"] = args.gamma_feature_convention
    for key, value in _parse_set(getattr(args, "set", []) or []).items():
        if key not in DEFAULTS:
            raise ValueError(f"unknown config key {key!r}")
        cfg[key] = value
    return cfg


def synthetic_spec(cfg: dict) -> SyntheticSpec:
    seed = cfg["dataset.synthetic.seed"]
    relations = tuple(RelationSpec(**r) for r in cfg["dataset.synthetic.relations"])
    return SyntheticSpec(
        num_nodes=cfg["dataset.synthetic.num_nodes"],
        fraud_fraction=cfg["dataset.synthetic.fraud_fraction"],
        feature_dim=cfg["dataset.synthetic.feature_dim"],
        relations=relations,
        class_separation=cfg["dataset.synthetic.class_separation"],
        class_axis_noise=cfg["dataset.synthetic.class_axis_noise"],
        fraud_feature_camouflage=cfg["dataset.synthetic.fraud_feature_camouflage"],
        num_clusters=cfg["dataset.synthetic.num_clusters"],
        cluster_spread=cfg["dataset.synthetic.cluster_spread"],
        noise_scale=cfg["dataset.synthetic.noise_scale"],
        mixing_jitter=cfg["dataset.synthetic.mixing_jitter"],
        seed=cfg["seed"] if seed is None else seed,
    )


def _load_graph(cfg: dict):
    kind = cfg["dataset.kind"]
    if kind == "synthetic":
        logger.info("generating synthetic dataset")
        return generate_synthetic(synthetic_spec(cfg))
    if kind == "files":
        path = cfg["dataset.path"]
        if not path:
            raise ValueError("dataset.kind is 'files' but dataset.path is unset")
        logger.info("loading dataset from %s", path)
        return load_dataset_dir(path)
    raise ValueError(f"unknown dataset.kind {kind!r}")


def _write_resolved(cfg: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")


def _settings(cfg: dict) -> RunSettings:
    return RunSettings(
        epochs=cfg["train.epochs"],
        learning_rate=cfg["train.learning_rate"],
        num_forward_passes=cfg["train.num_forward_passes"],
        num_layers=cfg["model.num_layers"],
        samples_per_layer=tuple(cfg["model.samples_per_layer"]),
        hidden_widths=tuple(cfg["model.hidden_widths"]),
        epsilon=cfg["model.epsilon"],
        combine_mode=cfg["model.combine_mode"],
        stratified=cfg["train.stratified"],
    )


def cmd_generate(args) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    g = generate_synthetic(synthetic_spec(cfg))
    save_dataset_dir(g, out)
    _write_resolved(cfg, out)
    stats = graph_stats(g)
    print(f"wrote {g.num_nodes} nodes, {g.num_relations} relations to {out}")
    print(f"merged: {stats.merged.num_edges} edges, avg degree {stats.merged.avg_degree:.1f}, "
          f"fraud fraction {stats.merged.fraud_fraction:.3f}")
    return 0


def cmd_analyze(args) -> int:
    cfg = resolve_config(args)
    g = _load_graph(cfg)
    report = relation_report(
        g,
        context_convention=cfg["metrics.context_convention"],
        feature_convention=cfg["metrics.feature_convention"],
        on_masked=cfg["metrics.on_masked"],
    )
    print(report.to_csv(), end="")
    if args.out:
        out = Path(args.out)
        _write_resolved(cfg, out)
        (out / "report.csv").write_text(report.to_csv())
        (out / "report.json").write_text(report.to_json() + "\n")
        print(f"report written to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    g = _load_graph(cfg)
    method = cfg["train.method"]
    seed = cfg["seed"]
    train_mask, _ = split_dataset(
        g, SplitSpec(cfg["train.train_fraction"], stratified=cfg["train.stratified"], seed=seed)
    )
    s = _settings(cfg)
    est = make_estimator(
        method,
        num_layers=s.num_layers,
        samples_per_layer=s.samples_per_layer,
        hidden_widths=s.hidden_widths,
        epsilon=s.epsilon,
        combine_mode=s.combine_mode,
        epochs=s.epochs,
        learning_rate=s.learning_rate,
        num_forward_passes=s.num_forward_passes,
        random_state=seed,
    )
    logger.info("training %s for %d epochs", method, s.epochs)
    est.fit(g, train_mask)
    _write_resolved(cfg, out)
    est.save(out / "checkpoint.json")
    history = est.loss_history_
    lines = ["epoch,loss"] + [f"{i},{loss!r}" for i, loss in enumerate(history)]
    (out / "loss_history.csv").write_text("\n".join(lines) + "\n")
    final = history[-1] if history else float("nan")
    print(f"trained {method}: {len(history)} epochs, final loss {final:.6f}, "
          f"checkpoint at {out / 'checkpoint.json'}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    g = _load_graph(cfg)
    jobs = cfg["jobs"] or (os.cpu_count() or 1)
    seeds = tuple(range(cfg["seed"], cfg["seed"] + cfg["eval.num_seeds"]))
    grid = run_experiment(
        g,
        methods=tuple(cfg["eval.methods"]),
        train_fractions=tuple(cfg["eval.train_fractions"]),
        seeds=seeds,
        settings=_settings(cfg),
        jobs=jobs,
    )
    _write_resolved(cfg, out)
    (out / "grid.csv").write_text(grid.to_csv())
    (out / "grid.json").write_text(grid.to_json() + "\n")
    print(grid.to_csv(), end="")
    failed = [r for r in grid.runs if r.status != "ok"]
    if failed:
        print(f"{len(failed)} runs failed; see grid.json", file=sys.stderr)
    print(f"grid written to {out}")
    return 0


def _add_common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--config", help="JSON config file (nested or flat dotted keys)")
    p.add_argument("--seed", type=int, default=None, help="base random seed (default 0)")
    p.add_argument("--out", required=out_required, help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key, e.g. --set train.epochs=50")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphconsis",
        description="Consistency-aware GNN fraud detection: synthetic data, "
                    "inconsistency metrics, training, and benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{generate,analyze,train,evaluate}")

    p = sub.add_parser("generate", help="write a synthetic dataset as node/edge files")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="per-relation inconsistency characteristics")
    _add_common(p, out_required=False)
    p.add_argument("--gamma-context-convention", choices=["same-label", "formula-literal"])
    p.add_argument("--gamma-feature-convention",
                   choices=["dim-normalized", "formula-literal"])
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train one method and write a checkpoint")
    _add_common(p)
    p.add_argument("--method", help="method to train (first of a csv list)")
    p.add_argument("--epsilon", type=float, help="consistency threshold")
    p.add_argument("--train-fraction", help="csv of fractions; first is used")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="run the full benchmark grid")
    _add_common(p)
    p.add_argument("--method", help="csv of methods to compare")
    p.add_argument("--epsilon", type=float, help="consistency threshold")
    p.add_argument("--train-fraction", help="csv of training fractions")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel worker processes (default: all processors)")
    p.set_defaults(func=cmd_evaluate)
    return parser


def run_command(argv: list[str]) -> int:
    """Entry point suitable for in-process invocation; returns the exit code."""
    level = os.environ.get("GRAPHCONSIS_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
