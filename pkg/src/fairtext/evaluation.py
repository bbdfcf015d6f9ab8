"""Detection and recognition scoring.

Reports use BIASED as the positive class (a per-class breakdown is
included so the other view is never lost). Undefined ratios (zero
denominators) are reported as None rather than being coerced to 0, and
render as JSON null.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .dataset import (
    AnnotatedExample,
    DatasetRecord,
    Label,
    Tag,
    to_token_tags,
    whitespace_tokenize,
)
from .detection import TrainedDetector, data_fingerprint, detect
from .errors import ValidationError
from .recognition import TrainedRecognizer, recognize

POSITIVE_CLASS = Label.BIASED


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def flipped(self) -> "ConfusionCounts":
        """Counts with the positive and negative classes swapped."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass
class MetricsReport:
    precision: float | None
    recall: float | None
    f1: float | None
    accuracy: float | None

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
        }


def metrics(counts: ConfusionCounts) -> MetricsReport:
    """Precision, recall, F1 and accuracy from raw confusion counts."""
    for name in ("tp", "fp", "fn", "tn"):
        if getattr(counts, name) < 0:
            raise ValidationError(f"negative count {name}={getattr(counts, name)}")

    precision = None
    if counts.tp + counts.fp > 0:
        precision = counts.tp / (counts.tp + counts.fp)
    recall = None
    if counts.tp + counts.fn > 0:
        recall = counts.tp / (counts.tp + counts.fn)
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    accuracy = None
    if counts.total > 0:
        accuracy = (counts.tp + counts.tn) / counts.total
    return MetricsReport(precision=precision, recall=recall, f1=f1, accuracy=accuracy)


@dataclass
class DetectionEvaluation:
    counts: ConfusionCounts
    report: MetricsReport
    per_class: dict[str, MetricsReport]
    threshold: float
    model_id: str
    dataset_fingerprint: str

    def to_dict(self) -> dict:
        return {
            "task": "detection",
            "positive_class": POSITIVE_CLASS.value,
            "model_id": self.model_id,
            "dataset_fingerprint": self.dataset_fingerprint,
            "threshold": self.threshold,
            "counts": self.counts.to_dict(),
            "metrics": self.report.to_dict(),
            "per_class": {
                name: report.to_dict() for name, report in self.per_class.items()
            },
        }


def evaluate_detection(
    detector: TrainedDetector,
    test: Sequence[DatasetRecord | AnnotatedExample],
    threshold: float = 0.5,
) -> DetectionEvaluation:
    """Score a detector on labelled texts."""
    if not test:
        raise ValidationError("no examples to evaluate")
    pairs = []
    for item in test:
        if item.label is None:
            raise ValidationError("unlabelled example in evaluation set")
        pairs.append((item.text, item.label))

    counts = ConfusionCounts()
    for text, actual in pairs:
        predicted = detect(detector, text, threshold=threshold).label
        if actual == POSITIVE_CLASS:
            if predicted == POSITIVE_CLASS:
                counts.tp += 1
            else:
                counts.fn += 1
        else:
            if predicted == POSITIVE_CLASS:
                counts.fp += 1
            else:
                counts.tn += 1
    per_class = {
        Label.BIASED.value: metrics(counts),
        Label.NON_BIASED.value: metrics(counts.flipped()),
    }
    return DetectionEvaluation(
        counts=counts,
        report=metrics(counts),
        per_class=per_class,
        threshold=threshold,
        model_id=detector.model_id,
        dataset_fingerprint=data_fingerprint(pairs),
    )


@dataclass
class RecognitionEvaluation:
    """Token-level scores are primary; exact span matches are a stricter
    secondary view of the same predictions."""

    token_counts: ConfusionCounts
    token_report: MetricsReport
    span_counts: ConfusionCounts
    span_report: MetricsReport
    n_examples: int
    model_id: str

    def to_dict(self) -> dict:
        return {
            "task": "recognition",
            "positive_class": "BIAS",
            "model_id": self.model_id,
            "n_examples": self.n_examples,
            "token": {
                "counts": self.token_counts.to_dict(),
                "metrics": self.token_report.to_dict(),
            },
            "span_exact": {
                "counts": self.span_counts.to_dict(),
                "metrics": self.span_report.to_dict(),
            },
        }


def evaluate_recognition(
    recognizer: TrainedRecognizer,
    test: Sequence[AnnotatedExample],
    tokenize: Callable = whitespace_tokenize,
) -> RecognitionEvaluation:
    """Score a recognizer against gold spans.

    Gold and predicted spans are both projected onto the same tokens, and
    tokens collapse to biased/not-biased (any non-O tag counts), so
    B-versus-I confusions are not penalised. The span block counts only
    exact (start, end) agreement.
    """
    if not test:
        raise ValidationError("no examples to evaluate")

    token_counts = ConfusionCounts()
    span_counts = ConfusionCounts()
    for example in test:
        predicted_spans = recognize(recognizer, example.text)
        predicted_example = AnnotatedExample(
            text=example.text,
            spans=[(s.start, s.end, s.surface) for s in predicted_spans],
            label=example.label,
        )
        gold_tags = to_token_tags(example, tokenize=tokenize).tags
        pred_tags = to_token_tags(predicted_example, tokenize=tokenize).tags
        for gold, pred in zip(gold_tags, pred_tags):
            gold_pos = gold != Tag.O
            pred_pos = pred != Tag.O
            if gold_pos and pred_pos:
                token_counts.tp += 1
            elif gold_pos:
                token_counts.fn += 1
            elif pred_pos:
                token_counts.fp += 1
            else:
                token_counts.tn += 1

        gold_set = {(start, end) for start, end, _ in example.spans}
        pred_set = {(s.start, s.end) for s in predicted_spans}
        span_counts.tp += len(gold_set & pred_set)
        span_counts.fp += len(pred_set - gold_set)
        span_counts.fn += len(gold_set - pred_set)

    return RecognitionEvaluation(
        token_counts=token_counts,
        token_report=metrics(token_counts),
        span_counts=span_counts,
        span_report=metrics(span_counts),
        n_examples=len(test),
        model_id=recognizer.model_id,
    )


def render_table(rows: list[tuple[str, MetricsReport]], percent: bool = True) -> str:
    """Fixed-width text table of metric rows.

    Undefined cells render as "n/a". With percent=True values are shown
    as whole percentages, matching how these scores are usually quoted.
    """
    if not rows:
        raise ValidationError("no rows to render")

    def cell(value: float | None) -> str:
        if value is None:
            return "n/a"
        if percent:
            return f"{100 * value:.1f}"
        return f"{value:.4f}"

    header = ["Model", "PREC", "REC", "F1", "ACC"]
    body = [
        [name, cell(r.precision), cell(r.recall), cell(r.f1), cell(r.accuracy)]
        for name, r in rows
    ]
    widths = [
        max(len(header[i]), *(len(row[i]) for row in body)) for i in range(len(header))
    ]
    lines = []
    for row in [header] + body:
        lines.append(
            "  ".join(
                col.ljust(widths[i]) if i == 0 else col.rjust(widths[i])
                for i, col in enumerate(row)
            ).rstrip()
        )
    return "\n".join(lines)
