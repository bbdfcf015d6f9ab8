"""Re-scoring fill candidates and selecting de-biased rewrites.

Every candidate sentence goes back through the detector; a candidate is
accepted when its bias probability drops below the acceptance threshold
or below the input's own probability. Callers always receive the
least-biased rewrite first, even when nothing qualifies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .detection import TrainedDetector, detect
from .errors import ValidationError
from .masking import FillCandidate


class DebiasStatus(Enum):
    UNBIASED_INPUT = "UNBIASED_INPUT"
    DEBIASED = "DEBIASED"
    BEST_EFFORT = "BEST_EFFORT"
    NO_SPANS_FOUND = "NO_SPANS_FOUND"


@dataclass
class CandidateScore:
    text: str
    probability: float
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "probability": self.probability,
            "accepted": self.accepted,
        }


@dataclass
class Selection:
    candidates: list[CandidateScore]
    status: DebiasStatus


@dataclass
class DebiasResult:
    original_text: str
    original_probability: float | None
    candidates: list[CandidateScore]
    status: DebiasStatus
    diagnostic: str | None = None
    trace: list[dict] = field(default_factory=list)

    def to_dict(self, include_trace: bool = False) -> dict:
        payload = {
            "original_text": self.original_text,
            "original_probability": self.original_probability,
            "status": self.status.value,
            "candidates": [c.to_dict() for c in self.candidates],
        }
        if self.diagnostic is not None:
            payload["diagnostic"] = self.diagnostic
        if include_trace:
            payload["trace"] = self.trace
        return payload

    def to_json(self, include_trace: bool = False) -> str:
        return json.dumps(self.to_dict(include_trace=include_trace))


def rescore(
    detector: TrainedDetector, candidates: list[FillCandidate]
) -> list[tuple[str, float]]:
    """Detector probability for each candidate text, sorted ascending by
    probability with lexicographic tie-breaking."""
    if not candidates:
        raise ValidationError("no candidates to rescore")
    scored = [
        (candidate.text, detect(detector, candidate.text).probability)
        for candidate in candidates
    ]
    scored.sort(key=lambda item: (item[1], item[0]))
    return scored


def select(
    original_probability: float,
    rescored: list[tuple[str, float]],
    threshold: float = 0.5,
) -> Selection:
    """Apply the acceptance rule to rescored candidates.

    A candidate is accepted iff its probability is below the threshold OR
    below the original text's probability (a disjunction: a candidate
    under the threshold passes even if it scores above the original).
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold outside [0,1]: {threshold}")
    if not rescored:
        raise ValidationError("empty rescored candidate list")
    probs = [p for _, p in rescored]
    if probs != sorted(probs):
        raise ValidationError("rescored candidates must be sorted ascending")

    candidates = [
        CandidateScore(
            text=text,
            probability=probability,
            accepted=probability < threshold or probability < original_probability,
        )
        for text, probability in rescored
    ]
    status = (
        DebiasStatus.DEBIASED
        if any(c.accepted for c in candidates)
        else DebiasStatus.BEST_EFFORT
    )
    return Selection(candidates=candidates, status=status)
