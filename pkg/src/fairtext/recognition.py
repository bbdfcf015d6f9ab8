"""Locating biased words and phrases inside a text.

Recognizers emit character-offset spans with confidence scores. Two
backend families exist: a lexicon matcher that shares its semantics with
the dataset span deriver, and trainable sequence labelers fed BIO tag
sequences. Raw backend output is always sanitized through the same
overlap-merge rule so downstream stages see sorted, non-overlapping
spans.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import MatchPolicy, Tag, TokenTagSequence, match_phrases
from .detection import (
    MANIFEST_NAME,
    EpochMetrics,
    TrainingConfig,
    read_manifest,
)
from .errors import ModelLoadError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BiasSpan:
    start: int
    end: int
    surface: str
    score: float

    def validate(self, text: str) -> None:
        if not (0 <= self.start < self.end <= len(text)):
            raise ValidationError(f"span ({self.start},{self.end}) out of bounds")
        if text[self.start:self.end] != self.surface:
            raise ValidationError(
                f"surface {self.surface!r} != text slice"
            )
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"span score outside [0,1]: {self.score}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


class RecognizerBackend(ABC):
    """Contract for span recognizers: fit on BIO tag sequences, predict
    spans for raw text."""

    name: str = "recognizer"

    @abstractmethod
    def fit(
        self,
        train: list[TokenTagSequence],
        dev: list[TokenTagSequence],
        config: TrainingConfig,
    ) -> list[EpochMetrics]:
        ...

    @abstractmethod
    def predict(self, text: str) -> list[BiasSpan]:
        ...

    @abstractmethod
    def save(self, directory: Path) -> None:
        ...

    @classmethod
    @abstractmethod
    def load(cls, directory: Path) -> "RecognizerBackend":
        ...


@dataclass
class TrainedRecognizer:
    backend: RecognizerBackend
    config: TrainingConfig
    model_id: str
    dev_metrics: dict = field(default_factory=dict)


def merge_spans(spans: list[BiasSpan], text: str) -> list[BiasSpan]:
    """Resolve raw predictions into sorted non-overlapping spans.

    Earliest start wins, then the longer span, then the higher score.
    Out-of-range or empty spans are dropped; surfaces are recomputed from
    the text so the output always satisfies the span invariants.
    """
    cleaned = []
    for span in spans:
        start = max(0, span.start)
        end = min(len(text), span.end)
        if start >= end:
            continue
        score = min(1.0, max(0.0, span.score))
        cleaned.append(BiasSpan(start, end, text[start:end], score))
    cleaned.sort(key=lambda s: (s.start, -(s.end - s.start), -s.score))

    merged: list[BiasSpan] = []
    cursor = 0
    for span in cleaned:
        if span.start < cursor:
            continue
        merged.append(span)
        cursor = span.end
    return merged


def token_f1(gold: list[Tag], pred: list[Tag]) -> float:
    """Binary token F1 with {B,I} collapsed to positive; 0.0 when undefined.
    Checkpoint-selection helper; reporting goes through the evaluation
    module."""
    tp = fp = fn = 0
    for g, p in zip(gold, pred):
        g_pos, p_pos = g is not Tag.O, p is not Tag.O
        tp += g_pos and p_pos
        fp += p_pos and not g_pos
        fn += g_pos and not p_pos
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def train_recognizer(
    train: list[TokenTagSequence],
    dev: list[TokenTagSequence],
    backend: RecognizerBackend,
    config: TrainingConfig | None = None,
) -> tuple[TrainedRecognizer, dict]:
    """Fit a recognizer backend; returns the trained handle and a report
    with token-level dev F1 per epoch."""
    config = config or TrainingConfig()
    config.validate()
    if not train:
        raise ValidationError("empty training set")
    for seq in train + dev:
        seq.validate()
    if not any(tag is Tag.B for seq in train for tag in seq.tags):
        raise ValidationError("all-O training data: nothing to recognize")

    epochs = backend.fit(train, dev, config)
    scored = [e for e in epochs if e.dev_f1 is not None]
    best = max(scored, key=lambda e: e.dev_f1) if scored else epochs[-1]
    model_id = f"{backend.name}-{len(train)}seq"
    recognizer = TrainedRecognizer(
        backend=backend,
        config=config,
        model_id=model_id,
        dev_metrics={"dev_f1": best.dev_f1, "dev_loss": best.dev_loss},
    )
    report = {
        "model_id": model_id,
        "backend": backend.name,
        "epochs": [dataclasses.asdict(e) for e in epochs],
        "best_epoch": best.epoch,
        "train_size": len(train),
        "dev_size": len(dev),
    }
    return recognizer, report


def recognize(recognizer: TrainedRecognizer, text: str) -> list[BiasSpan]:
    """Predict biased spans for one text; an empty list is a valid outcome."""
    if not text or not text.strip():
        raise ValidationError("empty text")
    raw = recognizer.backend.predict(text)
    spans = merge_spans(raw, text)
    for span in spans:
        span.validate(text)
    return spans


def lexicon_recognize(lexicon: set[str], text: str) -> list[BiasSpan]:
    """Match a phrase lexicon against the text; same semantics as dataset
    span derivation with all occurrences, score fixed at 1.0."""
    if not lexicon:
        raise ValidationError("empty lexicon")
    matches, _ = match_phrases(text, lexicon, MatchPolicy.ALL_OCCURRENCES)
    return [BiasSpan(start, end, surface, 1.0) for start, end, surface in matches]


# ---------------------------------------------------------------------------
# Lexicon files: one phrase per line, '#' starts a comment
# ---------------------------------------------------------------------------

def load_lexicon(path: str | Path) -> set[str]:
    phrases: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                phrases.add(line)
    return phrases


def save_lexicon(phrases: set[str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for phrase in sorted(phrases):
            fh.write(phrase + "\n")


def sequences_to_phrases(sequences: list[TokenTagSequence]) -> set[str]:
    """Harvest surface phrases from B/I runs; used to seed lexicons from
    training data."""
    phrases: set[str] = set()
    for seq in sequences:
        run: list[str] = []
        for token, tag in zip(seq.tokens, seq.tags):
            if tag is Tag.B:
                if run:
                    phrases.add(" ".join(run))
                run = [token]
            elif tag is Tag.I and run:
                run.append(token)
            else:
                if run:
                    phrases.add(" ".join(run))
                    run = []
        if run:
            phrases.add(" ".join(run))
    return phrases


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_recognizer(recognizer: TrainedRecognizer, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "kind": "recognizer",
        "model_id": recognizer.model_id,
        "backend": recognizer.backend.name,
        "config": dataclasses.asdict(recognizer.config),
        "metrics": recognizer.dev_metrics,
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    recognizer.backend.save(directory)


def load_recognizer(directory: str | Path) -> TrainedRecognizer:
    from . import backends  # deferred: backends imports this module

    directory = Path(directory)
    manifest = read_manifest(directory)
    if manifest.get("kind") != "recognizer":
        raise ModelLoadError(
            f"{directory} holds a {manifest.get('kind')}, not a recognizer"
        )
    backend_cls = backends.recognizer_class(manifest["backend"])
    backend = backend_cls.load(directory)
    return TrainedRecognizer(
        backend=backend,
        config=TrainingConfig(**manifest["config"]),
        model_id=manifest["model_id"],
        dev_metrics=manifest.get("metrics", {}),
    )
