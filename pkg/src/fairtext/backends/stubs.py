"""Table-driven backends for hermetic tests.

Each stub answers from an explicit lookup table and counts its calls, so
pipeline tests can pin exact behavior and assert which stages ran.
Missing-key behavior is configurable where the contract allows a benign
default.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..dataset import Label, TokenTagSequence
from ..detection import DetectorBackend, EpochMetrics, TrainingConfig
from ..errors import BackendError, ValidationError
from ..masking import DEFAULT_MASK, InfillerBackend
from ..recognition import BiasSpan, RecognizerBackend

_STUB_FILE = "stub.json"


def _load_payload(directory: Path, expected_kind: str) -> dict:
    path = Path(directory) / _STUB_FILE
    if not path.exists():
        raise BackendError(f"missing stub payload: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("kind") != expected_kind:
        raise BackendError(
            f"stub payload kind {payload.get('kind')!r} != {expected_kind!r}"
        )
    return payload


class StubDetector(DetectorBackend):
    """Detector that maps exact texts to fixed probabilities.

    Unknown texts raise unless a default probability is supplied.
    """

    name = "stub-detector"

    def __init__(
        self, table: dict[str, float], default: float | None = None
    ) -> None:
        self.table = dict(table)
        self.default = default
        self.fit_calls = 0
        self.predict_calls = 0
        self.seen: list[str] = []

    def fit(
        self,
        train: list[tuple[str, Label]],
        dev: list[tuple[str, Label]],
        config: TrainingConfig,
    ) -> list[EpochMetrics]:
        self.fit_calls += 1
        return [EpochMetrics(epoch=0, dev_loss=0.0, dev_f1=1.0)]

    def predict_proba(self, texts: list[str]) -> list[float]:
        self.predict_calls += 1
        self.seen.extend(texts)
        probs = []
        for text in texts:
            if text in self.table:
                probs.append(self.table[text])
            elif self.default is not None:
                probs.append(self.default)
            else:
                raise BackendError(f"stub detector has no probability for {text!r}")
        return probs

    def save(self, directory: Path) -> None:
        payload = {"kind": self.name, "table": self.table, "default": self.default}
        (Path(directory) / _STUB_FILE).write_text(
            json.dumps(payload, indent=2), encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: Path) -> "StubDetector":
        payload = _load_payload(directory, cls.name)
        return cls(table=payload["table"], default=payload["default"])


class StubRecognizer(RecognizerBackend):
    """Recognizer that maps exact texts to fixed (start, end) span lists."""

    name = "stub-recognizer"

    def __init__(
        self,
        table: dict[str, list[tuple[int, int]]],
        missing: str = "empty",
    ) -> None:
        if missing not in ("empty", "error"):
            raise ValidationError(f"unknown missing-key policy: {missing!r}")
        self.table = {text: [tuple(s) for s in spans] for text, spans in table.items()}
        self.missing = missing
        self.fit_calls = 0
        self.predict_calls = 0

    def fit(
        self,
        train: list[TokenTagSequence],
        dev: list[TokenTagSequence],
        config: TrainingConfig,
    ) -> list[EpochMetrics]:
        self.fit_calls += 1
        return [EpochMetrics(epoch=0, dev_loss=0.0, dev_f1=1.0)]

    def predict(self, text: str) -> list[BiasSpan]:
        self.predict_calls += 1
        if text not in self.table:
            if self.missing == "error":
                raise BackendError(f"stub recognizer has no spans for {text!r}")
            return []
        return [
            BiasSpan(start=start, end=end, surface=text[start:end], score=1.0)
            for start, end in self.table[text]
        ]

    def save(self, directory: Path) -> None:
        payload = {
            "kind": self.name,
            "table": {t: [list(s) for s in spans] for t, spans in self.table.items()},
            "missing": self.missing,
        }
        (Path(directory) / _STUB_FILE).write_text(
            json.dumps(payload, indent=2), encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: Path) -> "StubRecognizer":
        payload = _load_payload(directory, cls.name)
        return cls(table=payload["table"], missing=payload["missing"])


class StubInfiller(InfillerBackend):
    """Infiller that maps exact single-mask queries to (token, prob) lists.

    Enforces the exactly-one-mask contract and returns suggestions sorted
    by probability descending regardless of table order.
    """

    name = "stub-infiller"

    def __init__(
        self,
        table: dict[str, list[tuple[str, float]]],
        mask_token: str = DEFAULT_MASK,
        missing: str = "error",
    ) -> None:
        if missing not in ("empty", "error"):
            raise ValidationError(f"unknown missing-key policy: {missing!r}")
        self.table = {
            query: [(str(t), float(p)) for t, p in fills]
            for query, fills in table.items()
        }
        self.mask_token = mask_token
        self.missing = missing
        self.fill_calls = 0
        self.queries: list[str] = []

    def fill(self, text: str, k: int) -> list[tuple[str, float]]:
        self.fill_calls += 1
        self.queries.append(text)
        if k < 1:
            raise BackendError(f"k must be >= 1, got {k}")
        if text.count(self.mask_token) != 1:
            raise BackendError(
                f"expected exactly one {self.mask_token!r} placeholder: {text!r}"
            )
        if text not in self.table:
            if self.missing == "error":
                raise BackendError(f"stub infiller has no fills for {text!r}")
            return []
        fills = sorted(self.table[text], key=lambda item: (-item[1], item[0]))
        return fills[:k]

    def save(self, directory: Path) -> None:
        payload = {
            "kind": self.name,
            "table": {q: [list(f) for f in fills] for q, fills in self.table.items()},
            "mask_token": self.mask_token,
            "missing": self.missing,
        }
        (Path(directory) / _STUB_FILE).write_text(
            json.dumps(payload, indent=2), encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: Path) -> "StubInfiller":
        payload = _load_payload(directory, cls.name)
        return cls(
            table=payload["table"],
            mask_token=payload["mask_token"],
            missing=payload["missing"],
        )
