"""Command-line entry point.

    sentipipe <subcommand> [--config PATH] [--out DIR] [--seed N] ...

Exit codes: 0 success, 1 runtime failure, 2 invalid input or configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from sentipipe import data_path
from sentipipe.corpus import PUBLISHED_STATS, DatasetError, Label, TaskKind, class_distribution, load_dataset
from sentipipe.difficult import difficult_report, load_difficult_set, load_prediction_matrix, load_predictions
from sentipipe.embed import EmbeddingError
from sentipipe.experiment import (
    ConfigError,
    ExperimentConfig,
    encoder_from_checkpoint,
    run_experiment,
    run_grid,
)
from sentipipe.metrics import (
    METRIC_NAMES,
    MetricsError,
    compare_reference,
    comparison_to_tsv,
    evaluate,
    format_comparison,
    load_reference,
)
from sentipipe.models import load_checkpoint
from sentipipe.pipeline import prepare
from sentipipe.reformulate import Scheme, load_prompts
from sentipipe.textnorm import NormConfig, NormConfigError, normalize
from sentipipe.train import TrainingError, predict

log = logging.getLogger("sentipipe")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2


class UsageError(ValueError):
    pass


def _emit(text: str, out: str | None, name: str) -> None:
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _overrides(args) -> dict:
    return {"train": {"seed": str(args.seed)}} if args.seed is not None else {}


def _config(args) -> ExperimentConfig:
    if not args.config:
        raise UsageError(f"{args.command} needs --config")
    return ExperimentConfig.load(args.config, _overrides(args))


# ------------------------------------------------------------------ commands


def cmd_stats(args) -> int:
    if args.data:
        kind = TaskKind.parse(args.task_kind)
        paths = [Path(p) for p in args.data]
    else:
        cfg = _config(args)
        kind = TaskKind.parse(cfg.get("data", "task_kind"))
        paths = [p for p in (cfg.path("data", "train"), cfg.path("data", "test")) if p]
    lines = ["dataset\tvolume\tpositive\tnegative\tneutral"]
    for p in paths:
        ds = load_dataset(p, kind)
        dist = class_distribution(ds)
        pos, neg, neu = dist.rounded()
        lines.append(f"{ds.name}\t{len(ds)}\t{pos}\t{neg}\t{neu}")
    _emit("\n".join(lines) + "\n", args.out, "stats.tsv")
    if args.published:
        ref = ["dataset\ttrain_volume\ttest_volume\ttrain_pct\ttest_pct"]
        for name, (tr, te, trp, tep) in PUBLISHED_STATS.items():
            ref.append(f"{name}\t{tr}\t{te}\t{','.join(map(str, trp))}\t{','.join(map(str, tep))}")
        sys.stdout.write("\n".join(ref) + "\n")
    return EXIT_OK


def _norm_from(args) -> NormConfig:
    if args.config:
        cfg = _config(args)
        return cfg.norm_config() or NormConfig(steps=())
    return NormConfig()


def cmd_normalize(args) -> int:
    norm = _norm_from(args)
    if args.text is not None:
        lines = [args.text]
    elif args.input:
        lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    else:
        lines = sys.stdin.read().splitlines()
    _emit("\n".join(normalize(l, norm) for l in lines) + "\n", args.out, "normalized.txt")
    return EXIT_OK


def cmd_reformulate(args) -> int:
    prompts = load_prompts(args.prompts) if args.prompts else None
    if args.data:
        kind = TaskKind.parse(args.task_kind)
        ds = load_dataset(args.data, kind)
        norm = _norm_from(args) if args.normalize else None
        items = prepare(ds, args.scheme, norm, args.mask, prompts)
        ids = [s.id for s in ds]
    else:
        cfg = _config(args)
        ds = load_dataset(cfg.path("data", "train"), cfg.get("data", "task_kind"))
        items = prepare(ds, cfg.get("reformulate", "scheme"), cfg.norm_config(),
                        cfg.get("reformulate", "mask"), prompts)
        ids = [s.id for s in ds]
    lines = ["id\tsentence_a\tsentence_b"]
    lines += [f"{i}\t{it.sentence_a}\t{it.sentence_b or ''}" for i, it in zip(ids, items)]
    _emit("\n".join(lines) + "\n", args.out, "reformulated.tsv")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    out = run_experiment(cfg, args.out)
    sys.stdout.write((out / "mean_report.tsv").read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = _config(args)
    out = run_grid(cfg, args.out)
    sys.stdout.write((out / "grid.tsv").read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if args.predictions:
        if not args.gold:
            raise UsageError("--predictions needs --gold")
        ds = load_dataset(args.gold, args.task_kind)
        preds = load_predictions(args.predictions)
        missing = [s.id for s in ds if s.id not in preds]
        if missing:
            raise DatasetError(f"no prediction for ids: {', '.join(missing[:10])}")
        by_polarity = {l.polarity: l for l in Label}
        report = evaluate([s.label for s in ds], [by_polarity[preds[s.id]] for s in ds])
    else:
        if not args.checkpoint:
            raise UsageError("evaluate needs --checkpoint (with --config or --gold) or --predictions")
        model, meta, arrays = load_checkpoint(args.checkpoint)
        encoder = encoder_from_checkpoint(meta, arrays)
        extra = meta.get("extra", {})
        if args.config:
            cfg = _config(args)
            ds = load_dataset(cfg.path("data", "test"), cfg.get("data", "task_kind"))
            prompts_path = cfg.path("reformulate", "prompts")
            items = prepare(ds, cfg.get("reformulate", "scheme"), cfg.norm_config(),
                            cfg.get("reformulate", "mask"), load_prompts(prompts_path) if prompts_path else None)
        elif args.gold:
            ds = load_dataset(args.gold, extra.get("task_kind", args.task_kind))
            items = prepare(ds, extra.get("scheme", "single"), NormConfig())
        else:
            raise UsageError("evaluate --checkpoint needs --config or --gold")
        data = encoder.encode_dataset(ds, items)
        report = evaluate(data.labels, predict(model, data))
    _emit(report.to_tsv(), args.out, "report.tsv")
    if args.out:
        sys.stdout.write(report.to_text() + "\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    values = {}
    for lineno, line in enumerate(Path(args.report).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split("\t")
        if lineno == 1 or len(parts) != 2:
            continue
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            raise MetricsError(f"{args.report}:{lineno}: non-numeric value") from None
    values = {k: v for k, v in values.items() if k in METRIC_NAMES}
    if not values:
        raise MetricsError(f"{args.report}: no metric rows found")
    ref = load_reference(args.reference or data_path("reference_scores.tsv"))
    rows = compare_reference(values, ref, args.dataset)
    sys.stdout.write(format_comparison(rows, args.dataset) + "\n")
    if args.out:
        _emit(comparison_to_tsv(rows), args.out, "comparison.tsv")
    return EXIT_OK


def cmd_difficult(args) -> int:
    if args.matrix:
        gold, preds = load_prediction_matrix(args.matrix)
        ids = list(gold)
        if args.set:
            # keep the set's row order for the ids the matrix covers
            ids = [it.id for it in load_difficult_set(args.set) if it.id in gold]
    else:
        if not args.set or not args.predictions:
            raise UsageError("difficult needs --matrix, or --set with one or more --predictions NAME=PATH")
        items = load_difficult_set(args.set)
        gold = {it.id: it.gold for it in items}
        ids = [it.id for it in items]
        preds = {}
        for spec in args.predictions:
            name, sep, path = spec.partition("=")
            if not sep:
                name, path = Path(spec).stem, spec
            preds[name] = load_predictions(path)
    report = difficult_report(ids, gold, preds)
    sys.stdout.write(report.to_text())
    if args.out:
        _emit(report.to_tsv(), args.out, "difficult.tsv")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment INI file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="override [train] seed")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="sentipipe", description="Russian sentiment classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common], help="dataset volumes and class percentages")
    p.add_argument("data", nargs="*", help="dataset TSV files (default: train/test from --config)")
    p.add_argument("--task-kind", default="targeted", choices=[k.value for k in TaskKind])
    p.add_argument("--published", action="store_true", help="also print the published statistics")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("normalize", parents=[common], help="normalize text lines")
    p.add_argument("--text", help="a single string to normalize")
    p.add_argument("--input", help="file with one text per line (default: stdin)")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("reformulate", parents=[common], help="print model inputs for a dataset")
    p.add_argument("--data", help="dataset TSV (default: [data] train from --config)")
    p.add_argument("--task-kind", default="targeted", choices=[k.value for k in TaskKind])
    p.add_argument("--scheme", default="single", type=Scheme.parse)
    p.add_argument("--mask", default="MASK")
    p.add_argument("--prompts", help="scheme<TAB>sentence table")
    p.add_argument("--normalize", action="store_true", help="normalize sentence a")
    p.set_defaults(func=cmd_reformulate)

    p = sub.add_parser("train", parents=[common], help="run an experiment (runs x train + evaluate)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid", parents=[common], help="grid search on the validation split")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions or a checkpoint")
    p.add_argument("--gold", help="gold dataset TSV")
    p.add_argument("--predictions", help="id<TAB>label prediction file")
    p.add_argument("--checkpoint", help="checkpoint .npz from `train`")
    p.add_argument("--task-kind", default="targeted", choices=[k.value for k in TaskKind])
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common], help="computed vs published scores")
    p.add_argument("--report", required=True, help="metric<TAB>value report (e.g. mean_report.tsv)")
    p.add_argument("--reference", help="dataset<TAB>metric<TAB>value file (default: bundled published scores)")
    p.add_argument("--dataset", help="reference dataset key to compare against")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("difficult", parents=[common], help="difficult-examples table")
    p.add_argument("--set", help="difficult-set TSV (id, text, entity, gold)")
    p.add_argument("--predictions", nargs="*", help="NAME=PATH prediction files (id<TAB>label)")
    p.add_argument("--matrix", help="wide file id<TAB>gold<TAB>model...")
    p.set_defaults(func=cmd_difficult)
    return parser


INPUT_ERRORS = (ConfigError, UsageError, DatasetError, NormConfigError, EmbeddingError, MetricsError,
                FileNotFoundError, ValueError, KeyError)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TrainingError as exc:
        print(f"sentipipe: training failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except INPUT_ERRORS as exc:
        print(f"sentipipe: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"sentipipe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
