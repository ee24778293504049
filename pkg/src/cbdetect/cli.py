"""Command-line front end: ingest, stats, split, train, eval, predict, gridsearch.

Exit codes: 0 success, 1 usage error, 2 bad data or model file, 3 numeric
failure during training. Results go to stdout; progress and diagnostics go
to stderr, so stdout is safe to redirect into files.
"""

from __future__ import annotations

import argparse
import ast
import sys
from pathlib import Path

from cbdetect.corpus import STAT_ITEMS, SplitSpec, dataset_stats, load_dataset, save_dataset, split_dataset
from cbdetect.errors import DataError, NumericError, TransportError
from cbdetect.evaluation import format_report, render_value, write_roc_csv
from cbdetect.pipeline import (
    PRESETS,
    PipelineConfig,
    apply_settings,
    evaluate_pipeline,
    load_pipeline,
    save_pipeline,
    train_pipeline,
)
from cbdetect.tuning import grid_search, load_grid, write_trials_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_STAT_LABELS = {
    "title_length": "Title length",
    "description_length": "Description length",
    "view_count": "View count",
    "comment_count": "Comment count",
    "like_count": "Like count",
    "subscriber_count": "Subscriber count",
    "dislike_count": "Dislike count",
}


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def parse_settings(text: str) -> dict:
    """Flat ``key = value`` config lines; # comments and blanks skipped.

    Values parse as Python literals when possible and stay strings
    otherwise, so ``mlp.epochs = 10`` gives an int and
    ``features = title,likes`` gives text.
    """
    settings = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, rhs = line.partition("=")
        key, rhs = key.strip(), rhs.strip()
        if not eq or not key:
            raise DataError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        if key in settings:
            raise DataError(f"config line {lineno}: duplicate key {key!r}")
        try:
            settings[key] = ast.literal_eval(rhs)
        except (ValueError, SyntaxError):
            settings[key] = rhs
    return settings


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl", help="dataset encoding")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named experiment setup")
    p.add_argument("--model", choices=("logreg", "rf", "mlp"), help="classifier family")
    p.add_argument("--embed", choices=("word2vec", "attention"), help="text embedding")
    p.add_argument("--features", help="comma list of inputs, e.g. title,likes,views")
    p.add_argument("--config", help="flat key = value settings file")
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--jobs", type=int, default=1, help="worker budget for trees and trials")


def _build_config(args) -> PipelineConfig:
    cfg = PRESETS[args.preset] if args.preset else PipelineConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = apply_settings(cfg, parse_settings(fh.read()))
    flags = {}
    if args.model:
        flags["model"] = {"rf": "forest"}.get(args.model, args.model)
    if args.embed:
        flags["embed"] = args.embed
    if args.features:
        flags["features"] = args.features
    cfg = apply_settings(cfg, flags)
    return cfg.with_seed(args.seed).with_jobs(args.jobs)


def _cmd_ingest(args) -> int:
    data = load_dataset(args.path, format=args.format)
    labels = data.labels()
    disabled = sum(1 for r in data if r.comment_count is None)
    print(f"records: {len(data)}")
    print(f"clickbait: {int((labels == 1).sum())}")
    print(f"non-clickbait: {int((labels == 0).sum())}")
    print(f"comments disabled: {disabled}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    table = dataset_stats(load_dataset(args.path, format=args.format))
    rows = [("Data item", "Min", "Mean", "Max")]
    for item in STAT_ITEMS:
        lo, mean, hi = table[item]
        rows.append((_STAT_LABELS[item], str(int(lo)), render_value(mean), str(int(hi))))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [r[i].rjust(widths[i]) for i in range(1, 4)]
        print("  ".join(cells).rstrip())
    return EXIT_OK


def _cmd_split(args) -> int:
    data = load_dataset(args.path, format=args.format)
    spec = SplitSpec(test_fraction=args.test_fraction, seed=args.seed, stratified=args.stratified)
    train, test = split_dataset(data, spec)
    stem = Path(args.path)
    train_out = args.train_out or str(stem.with_suffix(".train.jsonl"))
    test_out = args.test_out or str(stem.with_suffix(".test.jsonl"))
    save_dataset(train, train_out)
    save_dataset(test, test_out)
    print(f"train: {len(train)} records -> {train_out}")
    print(f"test: {len(test)} records -> {test_out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = _build_config(args)
    data = load_dataset(args.data, format=args.format)
    model = train_pipeline(data, cfg, log=_log)
    save_pipeline(model, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    model = load_pipeline(args.model)
    data = load_dataset(args.data, format=args.format)
    outcome = evaluate_pipeline(model, data)
    print(format_report(outcome.report))
    print(f"AUC: {outcome.curve.auc}")
    write_roc_csv(outcome.curve, args.roc_out)
    _log(f"roc curve written to {args.roc_out}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = load_pipeline(args.model)
    data = load_dataset(args.data, format=args.format)
    probs = model.probs(data)
    labels = model.labels_from_probs(probs)
    for r, prob, label in zip(data, probs, labels):
        print(f"{r.video_id}\t{float(prob)}\t{int(label)}")
    return EXIT_OK


def _cmd_gridsearch(args) -> int:
    base = _build_config(args)
    grid = load_grid(args.grid)
    data = load_dataset(args.data, format=args.format)

    def train_fn(params, fit, seed):
        cfg = apply_settings(base, params).with_seed(seed)
        return train_pipeline(fit, cfg)

    def eval_fn(model, val):
        return evaluate_pipeline(model, val).report.accuracy

    _log(f"grid: {grid.size} combinations")
    best, trials = grid_search(
        grid,
        train_fn,
        eval_fn,
        data,
        holdout=args.holdout,
        k_folds=args.k_folds,
        seed=args.seed,
        jobs=args.jobs,
    )
    write_trials_csv(grid, trials, args.trials_out)
    _log(f"trial table written to {args.trials_out}")
    for name, value in best.params.items():
        print(f"best {name} = {value!r}")
    print(f"validation accuracy: {best.accuracy}")
    print(f"trials: {len(trials)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbdetect", description="Clickbait-video detection toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a dataset and print a summary")
    p.add_argument("path")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("stats", help="print min/mean/max of the numeric data items")
    p.add_argument("path")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("split", help="write train/test files")
    p.add_argument("path")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--test-fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--train-out")
    p.add_argument("--test-out")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train a full pipeline and save it")
    _add_data_args(p)
    _add_config_args(p)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a saved model on labeled data")
    p.add_argument("--model", required=True, help="model file")
    _add_data_args(p)
    p.add_argument("--roc-out", default="roc.csv", help="where to write the ROC sweep")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("predict", help="print per-video probability and label")
    p.add_argument("--model", required=True, help="model file")
    _add_data_args(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("gridsearch", help="search a hyperparameter grid")
    p.add_argument("--grid", required=True, help="axis = [values] file")
    _add_data_args(p)
    _add_config_args(p)
    p.add_argument("--holdout", type=float, default=0.2, help="validation fraction")
    p.add_argument("--k-folds", type=int, help="use k-fold validation instead of a holdout")
    p.add_argument("--trials-out", default="trials.csv", help="where to write the trial table")
    p.set_defaults(func=_cmd_gridsearch)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (DataError, TransportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
