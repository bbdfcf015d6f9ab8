"""End-to-end de-biasing: detect, recognize, mask, fill, re-score, select.

The detector acts as a gate: inputs under the threshold pass through
untouched. Biased inputs have their recognized spans masked and refilled
via the mask-shifting beam, and the refilled texts are re-scored by the
same detector to pick acceptable rewrites. Every stage appends to an
audit trace carried on the result, so tests (and curious users) can see
exactly which stages ran and what they produced.

Multi-sentence inputs are split with a simple punctuation splitter and
de-biased sentence by sentence; the combined recommendation replaces each
biased sentence with its best rewrite and is re-scored as a whole.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from .debias import CandidateScore, DebiasResult, DebiasStatus, rescore, select
from .detection import TrainedDetector, detect
from .errors import BackendError, FairtextError, NoFillError, ValidationError
from .masking import Granularity, InfillerBackend, build_masked, shift_fill
from .recognition import TrainedRecognizer, recognize

logger = logging.getLogger(__name__)

_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")

_CONFIG_KEYS = {
    "threshold", "k", "beam_width", "granularity",
    "detector_id", "recognizer_id", "infiller_id", "seed",
}


@dataclass
class PipelineConfig:
    detector_id: str
    recognizer_id: str
    infiller_id: str
    threshold: float = 0.5
    k: int = 10
    beam_width: int | None = None
    granularity: Granularity = Granularity.WORD
    seed: int = 0

    @property
    def effective_beam_width(self) -> int:
        return self.k if self.beam_width is None else self.beam_width

    def validate(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValidationError(f"threshold outside [0,1]: {self.threshold}")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.beam_width is not None and self.beam_width < 1:
            raise ValidationError("beam_width must be >= 1")
        for name in ("detector_id", "recognizer_id", "infiller_id"):
            if not getattr(self, name):
                raise ValidationError(f"{name} is required")

    def to_dict(self) -> dict:
        payload = dataclasses.asdict(self)
        payload["granularity"] = self.granularity.value
        return payload


def config_from_dict(data: dict) -> PipelineConfig:
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    missing = {"detector_id", "recognizer_id", "infiller_id"} - set(data)
    if missing:
        raise ValidationError(f"missing config keys: {sorted(missing)}")
    kwargs = dict(data)
    if "granularity" in kwargs:
        raw = str(kwargs["granularity"]).lower()
        try:
            kwargs["granularity"] = Granularity(raw)
        except ValueError:
            raise ValidationError(f"unknown granularity: {kwargs['granularity']!r}")
    config = PipelineConfig(**kwargs)
    config.validate()
    return config


def load_config(path: str | Path) -> PipelineConfig:
    """Read a JSON config file whose keys mirror PipelineConfig."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config root must be an object")
    return config_from_dict(data)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def apply_overrides(config: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """Apply key=value override strings on top of a config."""
    data = config.to_dict()
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValidationError(f"override must be key=value: {item!r}")
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"unknown config key: {key!r}")
        if key in ("k", "seed", "beam_width"):
            try:
                data[key] = int(value)
            except ValueError:
                raise ValidationError(f"{key} must be an integer: {value!r}")
        elif key == "threshold":
            try:
                data[key] = float(value)
            except ValueError:
                raise ValidationError(f"threshold must be a number: {value!r}")
        else:
            data[key] = value
    return config_from_dict(data)


def split_sentences(text: str) -> list[tuple[int, int]]:
    """(start, end) slices of sentences, splitting after .!? runs."""
    spans: list[tuple[int, int]] = []
    cursor = 0
    for match in _SENTENCE_BREAK.finditer(text):
        if text[cursor : match.start()].strip():
            spans.append((cursor, match.start()))
        cursor = match.end()
    if text[cursor:].strip():
        spans.append((cursor, len(text)))
    return spans


@dataclass
class BatchError:
    """Per-item failure record; batches keep going past bad items."""

    original_text: str
    error: str
    category: str

    def to_dict(self) -> dict:
        return {
            "original_text": self.original_text,
            "error": self.error,
            "category": self.category,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class _SentenceOutcome:
    text: str
    final: str
    status: DebiasStatus | None
    had_spans: bool
    diagnostic: str | None = None


class Pipeline:
    def __init__(
        self,
        detector: TrainedDetector,
        recognizer: TrainedRecognizer,
        infiller: InfillerBackend,
        config: PipelineConfig,
    ) -> None:
        config.validate()
        self.detector = detector
        self.recognizer = recognizer
        self.infiller = infiller
        self.config = config

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "Pipeline":
        from . import backends

        config.validate()
        return cls(
            detector=backends.resolve_detector(config.detector_id),
            recognizer=backends.resolve_recognizer(config.recognizer_id),
            infiller=backends.resolve_infiller(config.infiller_id),
            config=config,
        )

    def run(self, text: str) -> DebiasResult:
        if not text or not text.strip():
            raise ValidationError("empty input text")
        config = self.config
        trace: list[dict] = []

        gate = detect(self.detector, text, threshold=config.threshold)
        trace.append(
            {
                "stage": "detect",
                "text": text,
                "probability": gate.probability,
                "label": gate.label.value,
            }
        )
        if gate.probability < config.threshold:
            return DebiasResult(
                original_text=text,
                original_probability=gate.probability,
                candidates=[],
                status=DebiasStatus.UNBIASED_INPUT,
                trace=trace,
            )

        sentences = split_sentences(text)
        if len(sentences) <= 1:
            return self._debias_single(text, gate.probability, trace)
        return self._debias_multi(text, gate.probability, sentences, trace)

    def _debias_single(
        self, text: str, probability: float, trace: list[dict]
    ) -> DebiasResult:
        config = self.config
        spans = recognize(self.recognizer, text)
        trace.append(
            {"stage": "recognize", "spans": [s.to_dict() for s in spans]}
        )
        if not spans:
            return DebiasResult(
                original_text=text,
                original_probability=probability,
                candidates=[],
                status=DebiasStatus.NO_SPANS_FOUND,
                trace=trace,
            )

        masked = build_masked(text, spans, config.granularity)
        trace.append(
            {
                "stage": "mask",
                "masked": masked.render(),
                "slots": [dataclasses.asdict(s) for s in masked.slots],
            }
        )
        try:
            fills = shift_fill(
                masked,
                self.infiller,
                k=config.k,
                beam_width=config.effective_beam_width,
            )
        except NoFillError as err:
            trace.append({"stage": "fill", "error": str(err)})
            return DebiasResult(
                original_text=text,
                original_probability=probability,
                candidates=[],
                status=DebiasStatus.BEST_EFFORT,
                diagnostic=f"no admissible fills: {err}",
                trace=trace,
            )
        trace.append({"stage": "fill", "candidates": [f.to_dict() for f in fills]})

        rescored = rescore(self.detector, fills)
        trace.append(
            {
                "stage": "rescore",
                "scored": [{"text": t, "probability": p} for t, p in rescored],
            }
        )
        selection = select(probability, rescored, threshold=config.threshold)
        trace.append({"stage": "select", "status": selection.status.value})
        return DebiasResult(
            original_text=text,
            original_probability=probability,
            candidates=selection.candidates,
            status=selection.status,
            trace=trace,
        )

    def _debias_multi(
        self,
        text: str,
        probability: float,
        sentences: list[tuple[int, int]],
        trace: list[dict],
    ) -> DebiasResult:
        """Each sentence is de-biased on its own; the combined text swaps
        every biased sentence for its best rewrite and is then re-scored
        as a whole against the acceptance rule."""
        outcomes: list[_SentenceOutcome] = []
        for index, (start, end) in enumerate(sentences):
            sentence = text[start:end]
            events: list[dict] = []
            outcome = self._sentence_outcome(sentence, events)
            trace.append(
                {
                    "stage": "sentence",
                    "index": index,
                    "text": sentence,
                    "events": events,
                }
            )
            outcomes.append(outcome)

        diagnostics = [o.diagnostic for o in outcomes if o.diagnostic]
        diagnostic = "; ".join(diagnostics) if diagnostics else None

        if all(o.status is DebiasStatus.UNBIASED_INPUT for o in outcomes):
            # whole text gated as biased, yet every sentence alone is under
            # threshold: nothing to rewrite
            return DebiasResult(
                original_text=text,
                original_probability=probability,
                candidates=[],
                status=DebiasStatus.NO_SPANS_FOUND,
                diagnostic="no sentence crossed the bias threshold on its own",
                trace=trace,
            )
        if not any(o.had_spans for o in outcomes):
            return DebiasResult(
                original_text=text,
                original_probability=probability,
                candidates=[],
                status=DebiasStatus.NO_SPANS_FOUND,
                diagnostic=diagnostic,
                trace=trace,
            )
        if all(o.final == o.text for o in outcomes):
            # spans were found somewhere, but nothing produced a rewrite
            return DebiasResult(
                original_text=text,
                original_probability=probability,
                candidates=[],
                status=DebiasStatus.BEST_EFFORT,
                diagnostic=diagnostic or "no sentence produced a rewrite",
                trace=trace,
            )

        combined = []
        cursor = 0
        for (start, end), outcome in zip(sentences, outcomes):
            combined.append(text[cursor:start])
            combined.append(outcome.final)
            cursor = end
        combined.append(text[cursor:])
        combined_text = "".join(combined)

        final_probability = detect(
            self.detector, combined_text, threshold=self.config.threshold
        ).probability
        accepted = (
            final_probability < self.config.threshold
            or final_probability < probability
        )
        trace.append(
            {
                "stage": "combine",
                "text": combined_text,
                "probability": final_probability,
                "accepted": accepted,
            }
        )
        return DebiasResult(
            original_text=text,
            original_probability=probability,
            candidates=[
                CandidateScore(
                    text=combined_text,
                    probability=final_probability,
                    accepted=accepted,
                )
            ],
            status=DebiasStatus.DEBIASED if accepted else DebiasStatus.BEST_EFFORT,
            diagnostic=diagnostic,
            trace=trace,
        )

    def _sentence_outcome(self, sentence: str, events: list[dict]) -> _SentenceOutcome:
        """Run the single-sentence flow, folding its result into an outcome
        with the sentence's best final text."""
        config = self.config
        gate = detect(self.detector, sentence, threshold=config.threshold)
        events.append(
            {"stage": "detect", "probability": gate.probability, "label": gate.label.value}
        )
        if gate.probability < config.threshold:
            return _SentenceOutcome(
                text=sentence,
                final=sentence,
                status=DebiasStatus.UNBIASED_INPUT,
                had_spans=False,
            )
        result = self._debias_single(sentence, gate.probability, events)
        best = sentence
        if result.status is DebiasStatus.DEBIASED:
            best = next(c.text for c in result.candidates if c.accepted)
        return _SentenceOutcome(
            text=sentence,
            final=best,
            status=result.status,
            had_spans=result.status
            not in (DebiasStatus.NO_SPANS_FOUND, DebiasStatus.UNBIASED_INPUT),
            diagnostic=result.diagnostic,
        )

    def run_batch(self, texts: list[str]) -> list[DebiasResult | BatchError]:
        results: list[DebiasResult | BatchError] = []
        for text in texts:
            try:
                results.append(self.run(text))
            except BackendError as err:
                logger.error("backend failure on %r: %s", text, err)
                results.append(
                    BatchError(original_text=text, error=str(err), category="backend")
                )
            except FairtextError as err:
                logger.error("rejected input %r: %s", text, err)
                results.append(
                    BatchError(
                        original_text=text, error=str(err), category="validation"
                    )
                )
        return results


def run(config: PipelineConfig, text: str) -> DebiasResult:
    """One-shot convenience: build the pipeline from config and run it."""
    return Pipeline.from_config(config).run(text)


def run_batch(config: PipelineConfig, texts: list[str]) -> list[DebiasResult | BatchError]:
    return Pipeline.from_config(config).run_batch(texts)
