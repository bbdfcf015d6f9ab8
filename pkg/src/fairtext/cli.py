"""Command-line surface for ingestion, training, inference, and scoring.

Machine-readable results (JSONL) go to stdout or --out; everything else
(logging, diagnostics) goes to stderr. Exit codes: 0 success, 1 input or
validation problem, 2 model or backend problem. Human-readable tables
appear only behind --pretty.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import backends
from .dataset import (
    DatasetRecord,
    MatchPolicy,
    derive_spans,
    load_dataset,
    split,
    to_token_tags,
)
from .detection import TrainingConfig, detect, save_detector, train_detector
from .errors import BackendError, FairtextError, ValidationError
from .evaluation import (
    evaluate_detection,
    evaluate_recognition,
    render_table,
)
from .masking import validate_infiller
from .pipeline import BatchError, Pipeline, apply_overrides, load_config
from .recognition import recognize, save_recognizer, train_recognizer

logger = logging.getLogger(__name__)

_TRAINING_KEYS = {
    "batch_size", "epochs", "max_sequence_length",
    "num_labels", "learning_rate", "seed",
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors (exit 1)
    instead of calling sys.exit itself."""

    def error(self, message: str) -> None:
        raise ValidationError(message)


def _emit(lines: list[str], out: str | None) -> None:
    if out:
        Path(out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    else:
        for line in lines:
            print(line)


def _input_texts(args: argparse.Namespace) -> list[str]:
    if args.text is not None:
        return [args.text]
    path = Path(args.infile)
    if not path.is_file():
        raise ValidationError(f"input file not found: {path}")
    return [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _parse_ratios(raw: str) -> tuple[float, float, float]:
    parts = raw.split(",")
    if len(parts) != 3:
        raise ValidationError(f"ratios must be three comma-separated numbers: {raw!r}")
    try:
        ratios = tuple(float(p) for p in parts)
    except ValueError:
        raise ValidationError(f"ratios must be numeric: {raw!r}")
    return ratios  # split() validates the sum


def _training_config(set_args: list[str], seed: int) -> TrainingConfig:
    config = TrainingConfig(seed=seed)
    for item in set_args or []:
        key, sep, value = item.partition("=")
        if not sep or key not in _TRAINING_KEYS:
            raise ValidationError(
                f"training override must be key=value with key in "
                f"{sorted(_TRAINING_KEYS)}: {item!r}"
            )
        try:
            cast = float(value) if key == "learning_rate" else int(value)
        except ValueError:
            raise ValidationError(f"bad numeric value in override {item!r}")
        setattr(config, key, cast)
    config.validate()
    return config


def _load_records(args: argparse.Namespace) -> list[DatasetRecord]:
    result = load_dataset(args.data, format=args.format)
    if result.rejects:
        logger.warning("%d rows rejected during load", len(result.rejects))
    if getattr(args, "rejects", None):
        result.write_rejects(args.rejects)
    if not result.records:
        raise ValidationError("no usable rows in the dataset")
    return result.records


def _add_input_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--text", help="inline input text")
    group.add_argument("--in", dest="infile", help="file with one input per line")


def _add_data_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="dataset file (csv/tsv/jsonl)")
    parser.add_argument("--format", choices=["csv", "tsv", "jsonl"], default=None)
    parser.add_argument("--ratios", default="0.7,0.15,0.15",
                        help="train,dev,test fractions")
    parser.add_argument("--seed", type=int, default=0)


# Command handlers -----------------------------------------------------------

def _cmd_ingest(args: argparse.Namespace) -> int:
    records = _load_records(args)
    policy = (
        MatchPolicy.ALL_OCCURRENCES if args.match_policy == "all"
        else MatchPolicy.FIRST_OCCURRENCE
    )
    parts = split(records, ratios=_parse_ratios(args.ratios), seed=args.seed)
    split_of = {}
    for name, bucket in zip(("train", "dev", "test"), parts):
        for record in bucket:
            split_of[id(record)] = name

    lines = []
    for record in records:
        example = derive_spans(record, match_policy=policy)
        lines.append(
            json.dumps(
                {
                    "text": example.text,
                    "label": example.label.value,
                    "spans": [[s, e, surface] for s, e, surface in example.spans],
                    "warnings": example.warnings,
                    "split": split_of[id(record)],
                }
            )
        )
    _emit(lines, args.out)
    logger.info("ingested %d records", len(records))
    return 0


def _cmd_train_detect(args: argparse.Namespace) -> int:
    records = _load_records(args)
    train, dev, _ = split(records, ratios=_parse_ratios(args.ratios), seed=args.seed)
    config = _training_config(args.set, args.seed)
    backend = backends.detector_class(args.backend)()
    examples_train = [derive_spans(r) for r in train]
    examples_dev = [derive_spans(r) for r in dev]
    detector, report = train_detector(examples_train, examples_dev, backend, config)
    save_detector(detector, args.model_dir)
    payload = report.to_dict()
    payload["model_dir"] = str(args.model_dir)
    _emit([json.dumps(payload)], args.out)
    return 0


def _cmd_train_recognize(args: argparse.Namespace) -> int:
    records = _load_records(args)
    train, dev, _ = split(records, ratios=_parse_ratios(args.ratios), seed=args.seed)
    config = _training_config(args.set, args.seed)
    backend = backends.recognizer_class(args.backend)()
    train_seqs = [to_token_tags(derive_spans(r)) for r in train]
    dev_seqs = [to_token_tags(derive_spans(r)) for r in dev]
    recognizer, report = train_recognizer(train_seqs, dev_seqs, backend, config)
    save_recognizer(recognizer, args.model_dir)
    report["model_dir"] = str(args.model_dir)
    _emit([json.dumps(report)], args.out)
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    detector = backends.resolve_detector(args.model)
    lines = [
        json.dumps(detect(detector, text, threshold=args.threshold).to_dict())
        for text in _input_texts(args)
    ]
    _emit(lines, args.out)
    return 0


def _cmd_recognize(args: argparse.Namespace) -> int:
    recognizer = backends.resolve_recognizer(args.model)
    lines = []
    for text in _input_texts(args):
        spans = recognize(recognizer, text)
        lines.append(json.dumps({"text": text, "spans": [s.to_dict() for s in spans]}))
    _emit(lines, args.out)
    return 0


def _cmd_debias(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.set:
        config = apply_overrides(config, args.set)
    if args.seed is not None:
        config = apply_overrides(config, [f"seed={args.seed}"])
    pipeline = Pipeline.from_config(config)
    texts = _input_texts(args)
    if args.text is not None:
        lines = [pipeline.run(texts[0]).to_json(include_trace=args.trace)]
    else:
        lines = []
        for item in pipeline.run_batch(texts):
            if isinstance(item, BatchError):
                lines.append(item.to_json())
            else:
                lines.append(item.to_json(include_trace=args.trace))
    _emit(lines, args.out)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    records = _load_records(args)
    if args.split != "all":
        buckets = dict(
            zip(
                ("train", "dev", "test"),
                split(records, ratios=_parse_ratios(args.ratios), seed=args.seed),
            )
        )
        records = buckets[args.split]
        if not records:
            raise ValidationError(f"{args.split} split is empty")

    if args.task == "detection":
        detector = backends.resolve_detector(args.model)
        evaluation = evaluate_detection(detector, records, threshold=args.threshold)
        if args.pretty:
            print(render_table([(evaluation.model_id, evaluation.report)]))
            return 0
        _emit([json.dumps(evaluation.to_dict())], args.out)
        return 0

    recognizer = backends.resolve_recognizer(args.model)
    examples = [derive_spans(r) for r in records]
    evaluation = evaluate_recognition(recognizer, examples)
    if args.pretty:
        print(
            render_table(
                [
                    (f"{evaluation.model_id} (token)", evaluation.token_report),
                    (f"{evaluation.model_id} (span)", evaluation.span_report),
                ]
            )
        )
        return 0
    _emit([json.dumps(evaluation.to_dict())], args.out)
    return 0


def _cmd_validate_infiller(args: argparse.Namespace) -> int:
    infiller = backends.resolve_infiller(args.infiller)
    diagnostics = validate_infiller(infiller)
    _emit([json.dumps(diagnostics.to_dict())], args.out)
    if not diagnostics.ok:
        logger.error("infiller contract violations: %s", diagnostics.violations)
        return 2
    return 0


# Parser wiring --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="fairtext",
        description="Detect and rewrite biased language in news-style text.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, validate, annotate, and split a dataset")
    _add_data_args(p)
    p.add_argument("--match-policy", choices=["all", "first"], default="all")
    p.add_argument("--rejects", help="where to write rejected rows (JSONL)")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train-detect", help="train a bias detector")
    _add_data_args(p)
    p.add_argument("--model-dir", required=True)
    p.add_argument("--backend", default="reference-tfidf")
    p.add_argument("--set", action="append", default=[],
                   metavar="KEY=VALUE", help="training config override")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_train_detect)

    p = sub.add_parser("train-recognize", help="train a biased-span recognizer")
    _add_data_args(p)
    p.add_argument("--model-dir", required=True)
    p.add_argument("--backend", default="lexicon")
    p.add_argument("--set", action="append", default=[],
                   metavar="KEY=VALUE", help="training config override")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_train_recognize)

    p = sub.add_parser("detect", help="score texts for bias")
    p.add_argument("--model", required=True, help="model dir or id scheme")
    _add_input_args(p)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("recognize", help="locate biased spans in texts")
    p.add_argument("--model", required=True, help="model dir or id scheme")
    _add_input_args(p)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_recognize)

    p = sub.add_parser("debias", help="run the full de-biasing flow")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--set", action="append", default=[],
                   metavar="KEY=VALUE", help="pipeline config override")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trace", action="store_true",
                   help="include the per-stage audit trace")
    _add_input_args(p)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_debias)

    p = sub.add_parser("evaluate", help="score a model against labelled data")
    p.add_argument("--task", choices=["detection", "recognition"], required=True)
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.add_argument("--split", choices=["train", "dev", "test", "all"], default="all")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--pretty", action="store_true", help="text table, not JSON")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("validate-infiller", help="probe an infiller's contract")
    p.add_argument("--infiller", required=True)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_validate_infiller)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except BackendError as err:
        logger.error("%s", err)
        return 2
    except FairtextError as err:
        logger.error("%s", err)
        return 1
    except OSError as err:
        logger.error("%s", err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
