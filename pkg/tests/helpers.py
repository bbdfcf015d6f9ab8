"""Shared builders for the test suite: canonical stub wiring, tiny
dataset factories, and independent oracles the acceptance gate replays."""

from __future__ import annotations

import math
import random

from fairtext.backends.stubs import StubDetector, StubInfiller, StubRecognizer
from fairtext.dataset import DatasetRecord, Label
from fairtext.detection import TrainedDetector, TrainingConfig
from fairtext.masking import DEFAULT_MASK, MaskedText, build_masked
from fairtext.pipeline import Pipeline, PipelineConfig
from fairtext.recognition import BiasSpan, TrainedRecognizer

# A sentence whose loaded phrase sits at chars 14..36 ("pseudo-scientific hype")
CANONICAL = "Don't buy the pseudo-scientific hype about tornadoes and climate change"
CANONICAL_SPAN = (14, 36)

Q_SLOT0 = "Don't buy the [MASK] hype about tornadoes and climate change"
Q_SLOT1_SCIENTIFIC = "Don't buy the scientific [MASK] about tornadoes and climate change"
Q_SLOT1_MEDIA = "Don't buy the media [MASK] about tornadoes and climate change"

REWRITE_EVIDENCE = "Don't buy the scientific evidence about tornadoes and climate change"
REWRITE_COVERAGE = "Don't buy the scientific coverage about tornadoes and climate change"
REWRITE_MEDIA = "Don't buy the media coverage about tornadoes and climate change"


def canonical_stubs(
    original_prob: float = 0.9, rewrite_prob: float = 0.2
) -> tuple[StubDetector, StubRecognizer, StubInfiller]:
    detector = StubDetector({CANONICAL: original_prob}, default=rewrite_prob)
    recognizer = StubRecognizer({CANONICAL: [CANONICAL_SPAN]})
    infiller = StubInfiller(
        {
            Q_SLOT0: [("scientific", 0.6), ("media", 0.3)],
            Q_SLOT1_SCIENTIFIC: [("evidence", 0.5), ("coverage", 0.4)],
            Q_SLOT1_MEDIA: [("coverage", 0.7)],
        }
    )
    return detector, recognizer, infiller


def wrap_detector(backend, model_id: str = "stub-det") -> TrainedDetector:
    return TrainedDetector(backend=backend, config=TrainingConfig(), model_id=model_id)


def wrap_recognizer(backend, model_id: str = "stub-rec") -> TrainedRecognizer:
    return TrainedRecognizer(
        backend=backend, config=TrainingConfig(), model_id=model_id
    )


def canonical_pipeline(
    k: int = 2, **config_overrides
) -> tuple[Pipeline, StubDetector, StubRecognizer, StubInfiller]:
    detector, recognizer, infiller = canonical_stubs()
    config = PipelineConfig(
        detector_id="stub", recognizer_id="stub", infiller_id="stub",
        k=k, **config_overrides,
    )
    pipeline = Pipeline(
        detector=wrap_detector(detector),
        recognizer=wrap_recognizer(recognizer),
        infiller=infiller,
        config=config,
    )
    return pipeline, detector, recognizer, infiller


def write_stub_tables(directory) -> dict[str, str]:
    """Write canonical stub tables as JSON files and return resolvable
    model ids for them."""
    import json
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    det = directory / "det.json"
    det.write_text(json.dumps({"table": {CANONICAL: 0.9}, "default": 0.2}))
    rec = directory / "rec.json"
    rec.write_text(json.dumps({"table": {CANONICAL: [[14, 36]]}}))
    fill = directory / "fill.json"
    fill.write_text(
        json.dumps(
            {
                "table": {
                    Q_SLOT0: [["scientific", 0.6], ["media", 0.3]],
                    Q_SLOT1_SCIENTIFIC: [["evidence", 0.5], ["coverage", 0.4]],
                    Q_SLOT1_MEDIA: [["coverage", 0.7]],
                }
            }
        )
    )
    return {
        "detector_id": f"stub-detector:{det}",
        "recognizer_id": f"stub-recognizer:{rec}",
        "infiller_id": f"stub-infiller:{fill}",
    }


def brute_force_report(gold: list[bool], pred: list[bool]) -> dict:
    """Naive confusion scorer written straight from the definitions, kept
    deliberately independent of fairtext.evaluation."""
    tp = sum(1 for g, p in zip(gold, pred) if g and p)
    fp = sum(1 for g, p in zip(gold, pred) if not g and p)
    fn = sum(1 for g, p in zip(gold, pred) if g and not p)
    tn = sum(1 for g, p in zip(gold, pred) if not g and not p)
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    accuracy = (tp + tn) / len(gold) if gold else None
    return {
        "tp": tp, "fp": fp, "fn": fn, "tn": tn,
        "precision": precision, "recall": recall, "f1": f1, "accuracy": accuracy,
    }


def oracle_query(masked: MaskedText, chosen: tuple[str, ...], i: int, mask: str) -> str:
    """Independent re-derivation of the query convention: earlier slots
    carry chosen tokens, slot i the mask, later slots their originals."""
    parts = []
    cursor = 0
    for j, slot in enumerate(masked.slots):
        parts.append(masked.original[cursor : slot.start])
        if j < i:
            parts.append(chosen[j])
        elif j == i:
            parts.append(mask)
        else:
            parts.append(slot.surface)
        cursor = slot.end
    parts.append(masked.original[cursor:])
    return "".join(parts)


def build_fill_case(rng: random.Random, n_slots: int, n_tokens: int):
    """A masked text over n_slots words plus a stub table that covers every
    reachable query with n_tokens random proposals."""
    words = ["alpha", "beta", "gamma"][:n_slots]
    text = "start " + " ".join(words) + " end."
    spans = []
    cursor = 6
    for word in words:
        spans.append(BiasSpan(cursor, cursor + len(word), word, 1.0))
        cursor += len(word) + 1
    masked = build_masked(text, spans)

    vocab = ["one", "two", "three", "four", "five", "six", "seven", "eight"]
    table: dict[str, list[tuple[str, float]]] = {}

    def walk(i: int, chosen: tuple[str, ...]) -> None:
        if i == len(masked.slots):
            return
        query = oracle_query(masked, chosen, i, DEFAULT_MASK)
        if query not in table:
            tokens = rng.sample(vocab, n_tokens)
            probs = sorted((rng.uniform(0.05, 1.0) for _ in tokens), reverse=True)
            table[query] = list(zip(sorted(tokens), probs))
        for token, _ in table[query]:
            walk(i + 1, chosen + (token,))

    walk(0, ())
    return masked, StubInfiller(table)


def oracle_enumerate(masked, infiller, k):
    """Exhaustive fill ranking with the same per-step top-k and exclusions
    as the beam, written as plain depth-first recursion."""
    excluded = {s.surface.lower() for s in masked.slots}
    complete: list[tuple[tuple[str, ...], float]] = []

    def walk(i: int, chosen: tuple[str, ...], score: float) -> None:
        if i == len(masked.slots):
            complete.append((chosen, score))
            return
        query = oracle_query(masked, chosen, i, infiller.mask_token)
        for token, prob in infiller.fill(query, k)[:k]:
            if token.lower() in excluded:
                continue
            walk(i + 1, chosen + (token,), score + math.log(prob))

    walk(0, (), 0.0)
    rendered = [
        (tokens, score, oracle_query(masked, tokens, len(masked.slots), ""))
        for tokens, score in complete
    ]
    rendered.sort(key=lambda item: (-item[1], item[2]))
    return rendered


CRITERION_NOTES: list[str] = []


def note_criterion(number: int, ok: bool, detail: str) -> None:
    """Collect a PASS/FAIL line for the end-of-run summary, then enforce it."""
    verdict = "PASS" if ok else "FAIL"
    line = f"{verdict} criterion {number}: {detail}"
    CRITERION_NOTES.append(line)
    print(line)
    assert ok, line


def note_criterion_skip(number: int, reason: str) -> None:
    CRITERION_NOTES.append(f"SKIP criterion {number}: {reason}")


def record(text: str, biased: bool, words: list[str] | None = None) -> DatasetRecord:
    return DatasetRecord(
        text=text,
        label=Label.BIASED if biased else Label.NON_BIASED,
        biased_words=list(words or []),
    )


def tiny_detection_records() -> list[DatasetRecord]:
    """Two clearly separable classes, big enough to split and train on."""
    biased_words = ["disastrous", "corrupt", "reckless", "outrageous", "shameless"]
    rows: list[DatasetRecord] = []
    for i, word in enumerate(biased_words * 4):
        rows.append(
            record(
                f"The {word} committee pushed plan number {i} through.",
                biased=True,
                words=[word],
            )
        )
    for i in range(20):
        rows.append(
            record(f"The committee reviewed plan number {i} on Tuesday.", biased=False)
        )
    return rows
