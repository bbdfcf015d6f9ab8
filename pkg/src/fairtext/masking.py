"""Mask construction and sequential infilling over recognized spans.

Recognized spans become ordered mask slots (one per word by default, so a
two-word phrase yields two slots). Slots are then filled left to right:
at each step exactly one slot is masked for the infiller, earlier slots
carry the tokens chosen so far, and not-yet-reached slots keep their
original words as context. A beam over cumulative log-probability tracks
the best fill combinations.
"""

from __future__ import annotations

import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import BackendError, NoFillError, ValidationError
from .recognition import BiasSpan

DEFAULT_MASK = "[MASK]"

_TOKEN_RE = re.compile(r"\S+")


class Granularity(Enum):
    WORD = "word"
    SPAN = "span"


@dataclass(frozen=True)
class Slot:
    start: int
    end: int
    surface: str


@dataclass
class MaskedText:
    """Original text plus its ordered, non-overlapping mask slots."""

    original: str
    slots: list[Slot]

    def validate(self) -> None:
        cursor = 0
        for slot in self.slots:
            if not (0 <= slot.start < slot.end <= len(self.original)):
                raise ValidationError(f"slot ({slot.start},{slot.end}) out of bounds")
            if slot.start < cursor:
                raise ValidationError("slots overlap or are unsorted")
            if self.original[slot.start:slot.end] != slot.surface:
                raise ValidationError("slot surface does not match original text")
            cursor = slot.end

    def render(
        self,
        fills: Sequence[str | None] = (),
        mask_token: str = DEFAULT_MASK,
    ) -> str:
        """Substitute each slot with its fill; unfilled slots (None, or
        beyond the end of ``fills``) render as the mask placeholder.

        Rendering with every slot's original surface reproduces the
        original text exactly.
        """
        parts: list[str] = []
        cursor = 0
        for i, slot in enumerate(self.slots):
            fill = fills[i] if i < len(fills) else None
            parts.append(self.original[cursor:slot.start])
            parts.append(fill if fill is not None else mask_token)
            cursor = slot.end
        parts.append(self.original[cursor:])
        return "".join(parts)


@dataclass
class FillCandidate:
    tokens: list[str]
    log_score: float
    text: str

    def to_dict(self) -> dict:
        return {"tokens": self.tokens, "log_score": self.log_score, "text": self.text}


class InfillerBackend(ABC):
    """Single-mask top-k infiller contract.

    ``fill`` takes a text containing exactly one occurrence of
    ``mask_token`` and returns up to k (token, probability) pairs sorted by
    probability descending, probabilities in (0, 1]. Inputs with any other
    mask count must be rejected.
    """

    name: str = "infiller"
    mask_token: str = DEFAULT_MASK

    @abstractmethod
    def fill(self, text: str, k: int) -> list[tuple[str, float]]:
        ...


def build_masked(
    text: str,
    spans: list[BiasSpan],
    granularity: Granularity = Granularity.WORD,
) -> MaskedText:
    """Turn recognized spans into mask slots.

    WORD granularity gives every whitespace-delimited word inside a span
    its own slot; SPAN granularity keeps one slot per span. An empty span
    list yields a MaskedText with zero slots.
    """
    slots: list[Slot] = []
    for span in spans:
        span.validate(text)
        if granularity is Granularity.SPAN:
            slots.append(Slot(span.start, span.end, span.surface))
        else:
            for m in _TOKEN_RE.finditer(text, span.start, span.end):
                slots.append(Slot(m.start(), m.end(), m.group()))
    masked = MaskedText(original=text, slots=slots)
    masked.validate()
    return masked


def _render_query(
    masked: MaskedText, chosen: tuple[str, ...], current: int, mask_token: str
) -> str:
    # Exactly one mask per infiller call: slots after the current one keep
    # their original words until their own turn comes.
    fills: list[str | None] = list(chosen)
    fills.append(None)
    fills.extend(slot.surface for slot in masked.slots[current + 1:])
    return masked.render(fills, mask_token=mask_token)


def shift_fill(
    masked: MaskedText,
    infiller: InfillerBackend,
    k: int,
    beam_width: int | None = None,
    exclusions: set[str] | None = None,
) -> list[FillCandidate]:
    """Fill every slot left to right, keeping a beam of the best
    hypotheses by cumulative log-probability.

    Tokens in ``exclusions`` (case-insensitive; defaults to the slots'
    original surfaces) are never placed in any slot. A beam dies when the
    infiller offers it no admissible token; if all beams die the fill
    fails with NoFillError.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    beam_width = k if beam_width is None else beam_width
    if beam_width < 1:
        raise ValidationError("beam_width must be >= 1")
    if not masked.slots:
        raise ValidationError("masked text has no slots to fill")
    masked.validate()

    if exclusions is None:
        exclusions = {slot.surface for slot in masked.slots}
    excluded = {e.lower() for e in exclusions}

    beams: list[tuple[tuple[str, ...], float]] = [((), 0.0)]
    for i in range(len(masked.slots)):
        extended: list[tuple[tuple[str, ...], float]] = []
        for tokens, score in beams:
            query = _render_query(masked, tokens, i, infiller.mask_token)
            proposals = infiller.fill(query, k)
            for token, prob in proposals[:k]:
                if token.lower() in excluded:
                    continue
                if not 0.0 < prob <= 1.0:
                    raise BackendError(
                        f"infiller {infiller.name} proposed probability {prob}"
                    )
                extended.append((tokens + (token,), score + math.log(prob)))
        if not extended:
            raise NoFillError(f"no admissible fill for slot {i} on any beam")
        extended.sort(key=lambda b: (-b[1], b[0]))
        beams = extended[:beam_width]

    candidates = [
        FillCandidate(tokens=list(tokens), log_score=score, text=masked.render(tokens))
        for tokens, score in beams
    ]
    candidates.sort(key=lambda c: (-c.log_score, c.text))
    return candidates


# ---------------------------------------------------------------------------
# Infiller contract diagnostics
# ---------------------------------------------------------------------------

@dataclass
class InfillerDiagnostics:
    backend: str
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"backend": self.backend, "ok": self.ok, "violations": self.violations}


def validate_infiller(infiller: InfillerBackend) -> InfillerDiagnostics:
    """Probe an infiller against its contract on synthetic inputs."""
    mask = infiller.mask_token
    violations: list[str] = []

    def probe_valid(text: str, k: int) -> None:
        try:
            result = infiller.fill(text, k)
        except Exception as err:  # one-mask input must succeed
            violations.append(f"fill failed on valid input: {err}")
            return
        if len(result) > k:
            violations.append(f"returned {len(result)} proposals for k={k}")
        probs = [p for _, p in result]
        if any(not 0.0 < p <= 1.0 for p in probs):
            violations.append(f"probabilities outside (0,1]: {probs}")
        if any(a < b for a, b in zip(probs, probs[1:])):
            violations.append(f"probabilities not descending: {probs}")
        if any(not token for token, _ in result):
            violations.append("empty token string proposed")

    probe_valid(f"The {mask} opened on schedule.", 3)
    probe_valid(f"A {mask} statement.", 1)

    for bad, label in [
        (f"{mask} and {mask} were cited.", "two"),
        ("No placeholder here.", "zero"),
    ]:
        try:
            infiller.fill(bad, 2)
        except Exception:
            pass  # rejection is the contract
        else:
            violations.append(f"accepted input with {label} mask placeholders")

    return InfillerDiagnostics(backend=infiller.name, violations=violations)
