"""Binary bias classification behind a backend-agnostic interface.

A detector backend turns (text, label) pairs into a trained model that
emits a bias probability per text. The reference backend (TFIDF plus
logistic regression) runs on any CPU in seconds; transformer backends
implement the same interface.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import AnnotatedExample, Label
from .errors import ModelLoadError, SingleClassError, ValidationError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class TrainingConfig:
    batch_size: int = 16
    epochs: int = 10
    max_sequence_length: int = 512
    num_labels: int = 2
    learning_rate: float = 5e-5
    seed: int = 0

    def validate(self) -> None:
        for name in ("batch_size", "epochs", "max_sequence_length", "num_labels"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.num_labels != 2:
            raise ValidationError("binary task: num_labels must be 2")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")


@dataclass
class DetectionResult:
    probability: float
    label: Label
    model_id: str

    def to_dict(self) -> dict:
        return {
            "probability": self.probability,
            "label": self.label.value,
            "model_id": self.model_id,
        }


@dataclass
class EpochMetrics:
    epoch: int
    dev_loss: float | None
    dev_f1: float | None


@dataclass
class TrainingReport:
    model_id: str
    backend: str
    epochs: list[EpochMetrics]
    best_epoch: int
    train_size: int
    dev_size: int
    data_fingerprint: str

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "backend": self.backend,
            "epochs": [dataclasses.asdict(e) for e in self.epochs],
            "best_epoch": self.best_epoch,
            "train_size": self.train_size,
            "dev_size": self.dev_size,
            "data_fingerprint": self.data_fingerprint,
        }


class DetectorBackend(ABC):
    """Contract for bias classifiers.

    ``fit`` trains on (text, Label) pairs, evaluates on dev after each
    epoch, and must retain the best-dev-F1 state as the live model.
    ``predict_proba`` maps texts to biased-class probabilities in [0, 1],
    one per input.
    """

    name: str = "detector"

    @abstractmethod
    def fit(
        self,
        train: list[tuple[str, Label]],
        dev: list[tuple[str, Label]],
        config: TrainingConfig,
    ) -> list[EpochMetrics]:
        ...

    @abstractmethod
    def predict_proba(self, texts: list[str]) -> list[float]:
        ...

    @abstractmethod
    def save(self, directory: Path) -> None:
        ...

    @classmethod
    @abstractmethod
    def load(cls, directory: Path) -> "DetectorBackend":
        ...


@dataclass
class TrainedDetector:
    backend: DetectorBackend
    config: TrainingConfig
    model_id: str
    data_fingerprint: str = ""
    dev_metrics: dict = field(default_factory=dict)


def binary_f1(gold: list[Label], pred: list[Label]) -> float:
    """Positive-class (BIASED) F1; 0.0 when undefined. Internal helper for
    checkpoint selection; reporting goes through the evaluation module."""
    tp = sum(1 for g, p in zip(gold, pred) if g is Label.BIASED and p is Label.BIASED)
    fp = sum(1 for g, p in zip(gold, pred) if g is Label.NON_BIASED and p is Label.BIASED)
    fn = sum(1 for g, p in zip(gold, pred) if g is Label.BIASED and p is Label.NON_BIASED)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def data_fingerprint(pairs: list[tuple[str, Label]]) -> str:
    digest = hashlib.sha256()
    for text, label in sorted(pairs, key=lambda p: (p[0], p[1].value)):
        digest.update(text.encode("utf-8"))
        digest.update(b"\x1f")
        digest.update(label.value.encode("ascii"))
        digest.update(b"\n")
    return digest.hexdigest()


def _to_pairs(examples: list[AnnotatedExample]) -> list[tuple[str, Label]]:
    return [(ex.text, ex.label) for ex in examples]


def train_detector(
    train: list[AnnotatedExample],
    dev: list[AnnotatedExample],
    backend: DetectorBackend,
    config: TrainingConfig | None = None,
) -> tuple[TrainedDetector, TrainingReport]:
    """Fit a detector backend and return the best-dev-F1 model plus report."""
    config = config or TrainingConfig()
    config.validate()
    if not train:
        raise ValidationError("empty training set")
    train_pairs = _to_pairs(train)
    dev_pairs = _to_pairs(dev)
    train_labels = {label for _, label in train_pairs}
    if len(train_labels) < 2:
        raise SingleClassError(
            f"training set contains a single class: {next(iter(train_labels)).value}"
        )

    epochs = backend.fit(train_pairs, dev_pairs, config)
    scored = [e for e in epochs if e.dev_f1 is not None]
    best = max(scored, key=lambda e: e.dev_f1) if scored else epochs[-1]

    fingerprint = data_fingerprint(train_pairs)
    model_id = f"{backend.name}-{fingerprint[:12]}"
    detector = TrainedDetector(
        backend=backend,
        config=config,
        model_id=model_id,
        data_fingerprint=fingerprint,
        dev_metrics={"dev_f1": best.dev_f1, "dev_loss": best.dev_loss},
    )
    report = TrainingReport(
        model_id=model_id,
        backend=backend.name,
        epochs=epochs,
        best_epoch=best.epoch,
        train_size=len(train_pairs),
        dev_size=len(dev_pairs),
        data_fingerprint=fingerprint,
    )
    return detector, report


def truncate_to_tokens(text: str, max_tokens: int) -> str:
    """Whitespace-token truncation; warns when anything is cut."""
    tokens = text.split()
    if len(tokens) <= max_tokens:
        return text
    logger.warning(
        "input of %d tokens truncated to %d for detection", len(tokens), max_tokens
    )
    return " ".join(tokens[:max_tokens])


def detect(
    detector: TrainedDetector, text: str, threshold: float = 0.5
) -> DetectionResult:
    """Score one text. Ties at the threshold classify as BIASED so the
    pipeline errs toward attempting a rewrite."""
    if not text or not text.strip():
        raise ValidationError("empty text")
    text = truncate_to_tokens(text, detector.config.max_sequence_length)
    probability = float(detector.backend.predict_proba([text])[0])
    if not 0.0 <= probability <= 1.0:
        raise ValidationError(
            f"backend produced probability outside [0,1]: {probability}"
        )
    label = Label.BIASED if probability >= threshold else Label.NON_BIASED
    return DetectionResult(probability=probability, label=label, model_id=detector.model_id)


# ---------------------------------------------------------------------------
# Persistence: model directory = manifest + backend payload
# ---------------------------------------------------------------------------

def save_detector(detector: TrainedDetector, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "kind": "detector",
        "model_id": detector.model_id,
        "backend": detector.backend.name,
        "config": dataclasses.asdict(detector.config),
        "data_fingerprint": detector.data_fingerprint,
        "metrics": detector.dev_metrics,
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    detector.backend.save(directory)


def read_manifest(directory: str | Path) -> dict:
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise ModelLoadError(f"no manifest in {directory}")
    return json.loads(path.read_text(encoding="utf-8"))


def load_detector(directory: str | Path) -> TrainedDetector:
    from . import backends  # deferred: backends imports this module

    directory = Path(directory)
    manifest = read_manifest(directory)
    if manifest.get("kind") != "detector":
        raise ModelLoadError(f"{directory} holds a {manifest.get('kind')}, not a detector")
    backend_cls = backends.detector_class(manifest["backend"])
    backend = backend_cls.load(directory)
    return TrainedDetector(
        backend=backend,
        config=TrainingConfig(**manifest["config"]),
        model_id=manifest["model_id"],
        data_fingerprint=manifest.get("data_fingerprint", ""),
        dev_metrics=manifest.get("metrics", {}),
    )
