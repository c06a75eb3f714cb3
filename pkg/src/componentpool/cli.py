"""Command-line front end for training, experiments, stats and benchmarks.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import checkpoint, data as data_mod
from .bench import bench_pool_scaling
from .edgepool import edgepool_contract
from .graph import GraphValidationError, build_graph
from .nn import Model, ModelConfig, UsageError, count_parameters
from .pooling import EdgeScorer, ShapeError, pool, pool_result_to_dict
from .stats import SIGNIFICANCE_LEVEL, t_test
from .training import (
    ResultRecord,
    TrainConfig,
    TrainingError,
    evaluate,
    run_experiment,
    split_dataset,
    standardize_features,
    train_model,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

FEATURE_FLAGS = {"native": "native", "scalar": "scalar-one", "degree": "degree-one-hot"}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` text config; blank lines and # comments ignored."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}: malformed line {raw!r}")
        key, val = line.split("=", 1)
        values[key.strip()] = val.strip()
    return values


def build_train_config(
    config_values: dict, input_dim: int, num_classes: int, seed: int, operator: str | None
) -> TrainConfig:
    model = ModelConfig(
        architecture=config_values.get("architecture", "CPCL"),
        hidden_size=int(config_values.get("hidden_size", 16)),
        num_classes=num_classes,
        input_dim=input_dim,
        dropout=float(config_values.get("dropout", 0.0)),
        operator=operator or config_values.get("operator", "component"),
    )
    halving = config_values.get("lr_halving_every")
    return TrainConfig(
        model=model,
        epochs=int(config_values.get("epochs", 100)),
        learning_rate=float(config_values.get("learning_rate", 0.001)),
        lr_halving_every=int(halving) if halving else None,
        seed=seed,
        batch_size=int(config_values.get("batch_size", 32)),
    )


def load_dataset(args) -> data_mod.Dataset:
    if getattr(args, "cache", None):
        return data_mod.load_dataset_cache(args.cache)
    dataset = data_mod.parse_tudataset(args.data_dir, args.dataset)
    mode = FEATURE_FLAGS[getattr(args, "features", "native")]
    return data_mod.apply_feature_mode(dataset, mode)


def add_dataset_args(parser, require_dir=True):
    parser.add_argument("--data-dir", help="directory with the dataset text files")
    parser.add_argument("--dataset", help="dataset name, e.g. PROTEINS")
    parser.add_argument("--cache", help="load a previously written dataset cache instead")
    parser.add_argument(
        "--features", choices=sorted(FEATURE_FLAGS), default="native",
        help="feature synthesis mode applied after parsing",
    )


def cmd_ingest(args) -> int:
    dataset = data_mod.parse_tudataset(args.directory, args.dataset)
    dataset = data_mod.apply_feature_mode(dataset, FEATURE_FLAGS[args.features])
    sizes = [g.num_nodes for g in dataset.graphs]
    edge_counts = [g.num_edges // 2 for g in dataset.graphs]
    print(
        f"{dataset.name}: {len(dataset)} graphs, {dataset.num_classes} classes, "
        f"feature dim {dataset.feature_dim}, mean |V| {np.mean(sizes):.2f}, "
        f"mean |E| {np.mean(edge_counts):.2f}"
    )
    if args.out:
        data_mod.save_dataset_cache(dataset, args.out)
        print(f"cache written to {args.out}")
    return EXIT_OK


def _prepared_split(dataset, seed):
    train, val, test = split_dataset(dataset, seed)
    if dataset.feature_mode == "native":
        train, val, test = standardize_features(train, val, test)
    return train, val, test


def cmd_train(args) -> int:
    dataset = load_dataset(args)
    values = read_config_file(args.config) if args.config else {}
    config = build_train_config(
        values, dataset.feature_dim, dataset.num_classes, args.seed, args.operator
    )
    train, val, _ = _prepared_split(dataset, args.seed)
    model, history = train_model(config, train, val)
    print(
        f"trained {config.model.architecture} ({count_parameters(model)} parameters); "
        f"best validation accuracy {max(history.validation_accuracy):.4f} "
        f"at epoch {history.best_epoch}"
    )
    if args.out:
        checkpoint.save_model(model, args.out)
        print(f"checkpoint written to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = checkpoint.load_model(args.checkpoint)
    dataset = load_dataset(args)
    train, val, test = _prepared_split(dataset, args.seed)
    split = {"train": train, "validation": val, "test": test}[args.split]
    acc = evaluate(model, split)
    print(f"{args.split} accuracy: {acc:.4f}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    dataset = load_dataset(args)
    values = read_config_file(args.config) if args.config else {}
    config = build_train_config(
        values, dataset.feature_dim, dataset.num_classes, args.seed_base, args.operator
    )
    records, summary = run_experiment(
        config, dataset, args.repetitions, seed_base=args.seed_base, out_path=args.out
    )
    mean = 100 * summary["mean_test_accuracy"]
    std = 100 * summary["std_test_accuracy"]
    print(f"test accuracy over {len(records)} repetitions: {mean:.1f} +/- {std:.1f}")
    if args.out:
        summary_path = Path(args.out).with_suffix(".summary.json")
        summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
        print(f"records written to {args.out}, summary to {summary_path}")
    return EXIT_OK


def _read_records(path: str) -> list[float]:
    lines = Path(path).read_text().splitlines()
    return [ResultRecord.from_json(line).test_accuracy for line in lines if line.strip()]


def cmd_stats(args) -> int:
    scores_a = _read_records(args.a)
    scores_b = _read_records(args.b)
    t, p = t_test(scores_a, scores_b, equal_var=args.equal_var)
    verdict = "significant" if p < SIGNIFICANCE_LEVEL else "not significant"
    print(f"t = {t:.6f}, p = {p:.6f} ({verdict} at {SIGNIFICANCE_LEVEL})")
    return EXIT_OK


def cmd_params(args) -> int:
    values = read_config_file(args.config)
    config = build_train_config(
        values,
        input_dim=int(values.get("input_dim", args.input_dim)),
        num_classes=int(values.get("num_classes", args.num_classes)),
        seed=0,
        operator=None,
    )
    model = Model(config.model, np.random.default_rng(0))
    print(count_parameters(model))
    return EXIT_OK


def cmd_bench(args) -> int:
    sizes = [int(float(s)) for s in args.sizes.split(",")]
    rows, slope = bench_pool_scaling(args.operator, sizes, repeats=args.repeats)
    print(f"{'|V|':>10} {'|E|':>10} {'median seconds':>16}")
    for row in rows:
        print(f"{row.num_nodes:>10} {row.num_edges:>10} {row.median_seconds:>16.6f}")
    if slope is not None:
        print(f"log-log slope: {slope:.3f}")
    return EXIT_OK


def cmd_pool(args) -> int:
    payload = json.loads(Path(args.graph).read_text())
    graph = build_graph(
        num_nodes=payload["num_nodes"],
        edge_list=payload.get("edges", []),
        features=np.asarray(payload["features"], dtype=np.float64),
    )
    rng = np.random.default_rng(args.seed)
    scorer = EdgeScorer.initialize(graph.feature_dim, rng, threshold=args.threshold)
    op = edgepool_contract if args.operator == "edgepool" else pool
    result = op(graph, scorer)
    dump = pool_result_to_dict(result)
    if args.dump:
        Path(args.dump).write_text(json.dumps(dump, indent=2) + "\n")
        print(f"pool dump written to {args.dump}")
    else:
        print(json.dumps(dump, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="componentpool",
        description="Edge-based graph component pooling: training and experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a dataset directory and report/caches it")
    p.add_argument("directory")
    p.add_argument("--dataset", required=True)
    p.add_argument("--features", choices=sorted(FEATURE_FLAGS), default="native")
    p.add_argument("--out", help="write a binary dataset cache here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train one model on a seeded split")
    add_dataset_args(p)
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--operator", choices=["component", "edgepool", "none"])
    p.add_argument("--out", help="checkpoint output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    add_dataset_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=["train", "validation", "test"], default="test")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="repeated split/train/test runs")
    add_dataset_args(p)
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--operator", choices=["component", "edgepool", "none"])
    p.add_argument("--out", help="JSON-lines output for per-repetition records")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("stats", help="two-tailed t-test between two record files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--equal-var", action="store_true", help="Student instead of Welch")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("params", help="parameter count for a model config")
    p.add_argument("--config", required=True)
    p.add_argument("--input-dim", type=int, default=8)
    p.add_argument("--num-classes", type=int, default=2)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("bench", help="pooling scaling benchmark")
    p.add_argument("--operator", choices=["component", "edgepool"], default="component")
    p.add_argument("--sizes", default="1e3,1e4,1e5", help="comma-separated node counts")
    p.add_argument("--repeats", type=int, default=10)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("pool", help="pool one graph from a JSON file and dump it")
    p.add_argument("--graph", required=True, help="JSON with num_nodes, edges, features")
    p.add_argument("--dump", help="output JSON path (stdout if omitted)")
    p.add_argument("--operator", choices=["component", "edgepool"], default="component")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_pool)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError) as exc:
        if isinstance(exc, (GraphValidationError, ShapeError, json.JSONDecodeError)):
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (data_mod.IngestionError, checkpoint.ContainerError, OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
