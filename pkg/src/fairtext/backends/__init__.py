"""Backend registry and model-id resolution.

Registered names are what PipelineConfig's detector_id / recognizer_id /
infiller_id refer to, alongside two path-based forms:

  <directory>            a model directory written by save_detector /
                         save_recognizer
  <scheme>:<path-or-name>
      lexicon:FILE        phrase-per-line lexicon recognizer
      stub-detector:FILE  JSON table {"table": {text: prob}, "default": p|null}
      stub-recognizer:FILE JSON table {"table": {text: [[start, end], ...]}}
      stub-infiller:FILE  JSON table {"table": {query: [[token, prob], ...]}}
      mlm[:MODEL]         pretrained masked-LM infiller (optional extras)

Registration checks each class structurally against its interface;
behavioral probing of a constructed infiller goes through
masking.validate_infiller (see the validate-infiller CLI command), since
table-driven instances cannot be probed without their tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from ..detection import (
    DetectorBackend,
    TrainedDetector,
    TrainingConfig,
    load_detector,
)
from ..errors import BackendError, ModelLoadError, ValidationError
from ..masking import InfillerBackend
from ..recognition import (
    RecognizerBackend,
    TrainedRecognizer,
    load_lexicon,
    load_recognizer,
)
from .reference import LexiconRecognizer, TfidfLogisticDetector
from .stubs import StubDetector, StubInfiller, StubRecognizer

_BASES = {
    "detector": DetectorBackend,
    "recognizer": RecognizerBackend,
    "infiller": InfillerBackend,
}


@dataclass(frozen=True)
class Registration:
    kind: str
    name: str
    supplier: Callable[[], type]


_REGISTRY: dict[tuple[str, str], Registration] = {}


def register(kind: str, name: str, supplier: Callable[[], type]) -> None:
    if kind not in _BASES:
        raise ValidationError(f"unknown backend kind {kind!r}")
    key = (kind, name)
    if key in _REGISTRY:
        raise ValidationError(f"duplicate {kind} backend name {name!r}")
    _REGISTRY[key] = Registration(kind=kind, name=name, supplier=supplier)


def available(kind: str | None = None) -> list[str]:
    return sorted(n for k, n in _REGISTRY if kind is None or k == kind)


def backend_class(kind: str, name: str) -> type:
    key = (kind, name)
    if key not in _REGISTRY:
        raise ModelLoadError(
            f"unknown {kind} backend {name!r}; known: {available(kind)}"
        )
    cls = _REGISTRY[key].supplier()
    base = _BASES[kind]
    if not (isinstance(cls, type) and issubclass(cls, base)):
        raise BackendError(f"backend {name!r} does not implement {base.__name__}")
    abstract = getattr(cls, "__abstractmethods__", frozenset())
    if abstract:
        raise BackendError(
            f"backend {name!r} leaves abstract methods unimplemented: "
            f"{sorted(abstract)}"
        )
    return cls


def detector_class(name: str) -> type:
    return backend_class("detector", name)


def recognizer_class(name: str) -> type:
    return backend_class("recognizer", name)


def infiller_class(name: str) -> type:
    return backend_class("infiller", name)


def _transformer_attr(attr: str) -> Callable[[], type]:
    def supply() -> type:
        from . import transformer

        return getattr(transformer, attr)

    return supply


register("detector", TfidfLogisticDetector.name, lambda: TfidfLogisticDetector)
register("detector", StubDetector.name, lambda: StubDetector)
register("detector", "distilbert", _transformer_attr("DistilBertDetector"))
register("recognizer", LexiconRecognizer.name, lambda: LexiconRecognizer)
register("recognizer", StubRecognizer.name, lambda: StubRecognizer)
register("recognizer", "roberta-ner", _transformer_attr("RobertaRecognizer"))
register("infiller", StubInfiller.name, lambda: StubInfiller)
register("infiller", "mlm", _transformer_attr("MlmInfiller"))


# Factory shorthands ---------------------------------------------------------

def reference_detector() -> DetectorBackend:
    return TfidfLogisticDetector()


def transformer_detector(model_name: str = "distilbert-base-uncased") -> DetectorBackend:
    from . import transformer

    return transformer.DistilBertDetector(model_name)


def transformer_recognizer(model_name: str = "roberta-base") -> RecognizerBackend:
    from . import transformer

    return transformer.RobertaRecognizer(model_name)


def mlm_infiller(model_name: str = "bert-base-uncased") -> InfillerBackend:
    from . import transformer

    return transformer.MlmInfiller(model_name)


def stub_backends() -> dict[str, type]:
    return {
        "detector": StubDetector,
        "recognizer": StubRecognizer,
        "infiller": StubInfiller,
    }


# Model-id resolution --------------------------------------------------------

def _read_table_file(path_str: str, model_id: str) -> dict:
    path = Path(path_str)
    if not path.is_file():
        raise ModelLoadError(f"no table file for {model_id!r}: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelLoadError(f"bad JSON in {path}: {exc}") from exc
    if "table" not in payload:
        raise ModelLoadError(f"{path} has no 'table' key")
    return payload


def resolve_detector(model_id: str) -> TrainedDetector:
    """Turn a detector id (model directory or scheme:path) into a usable
    detector."""
    if Path(model_id).is_dir():
        return load_detector(model_id)
    scheme, _, payload = model_id.partition(":")
    if scheme == StubDetector.name and payload:
        data = _read_table_file(payload, model_id)
        backend = StubDetector(table=data["table"], default=data.get("default"))
        return TrainedDetector(
            backend=backend, config=TrainingConfig(), model_id=model_id
        )
    raise ModelLoadError(f"cannot resolve detector id {model_id!r}")


def resolve_recognizer(model_id: str) -> TrainedRecognizer:
    if Path(model_id).is_dir():
        return load_recognizer(model_id)
    scheme, _, payload = model_id.partition(":")
    if scheme == LexiconRecognizer.name and payload:
        try:
            phrases = load_lexicon(payload)
        except OSError as exc:
            raise ModelLoadError(f"cannot read lexicon for {model_id!r}: {exc}") from exc
        backend = LexiconRecognizer(phrases=phrases)
        return TrainedRecognizer(
            backend=backend, config=TrainingConfig(), model_id=model_id
        )
    if scheme == StubRecognizer.name and payload:
        data = _read_table_file(payload, model_id)
        backend = StubRecognizer(
            table=data["table"], missing=data.get("missing", "empty")
        )
        return TrainedRecognizer(
            backend=backend, config=TrainingConfig(), model_id=model_id
        )
    raise ModelLoadError(f"cannot resolve recognizer id {model_id!r}")


def resolve_infiller(infiller_id: str) -> InfillerBackend:
    scheme, _, payload = infiller_id.partition(":")
    if scheme == StubInfiller.name and payload:
        data = _read_table_file(payload, infiller_id)
        return StubInfiller(
            table=data["table"],
            mask_token=data.get("mask_token", "[MASK]"),
            missing=data.get("missing", "error"),
        )
    if scheme == "mlm":
        return mlm_infiller(payload) if payload else mlm_infiller()
    raise ModelLoadError(f"cannot resolve infiller id {infiller_id!r}")
