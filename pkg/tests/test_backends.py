import json

import pytest

from fairtext import backends
from fairtext.backends import (
    available,
    backend_class,
    detector_class,
    infiller_class,
    recognizer_class,
    register,
    resolve_detector,
    resolve_infiller,
    resolve_recognizer,
    stub_backends,
)
from fairtext.backends.reference import LexiconRecognizer, TfidfLogisticDetector
from fairtext.backends.stubs import StubDetector, StubInfiller, StubRecognizer
from fairtext.dataset import derive_spans
from fairtext.detection import DetectorBackend, save_detector, train_detector
from fairtext.errors import BackendError, ModelLoadError, ValidationError
from fairtext.masking import validate_infiller
from fairtext.recognition import TrainedRecognizer, save_recognizer

from helpers import CANONICAL, canonical_stubs, tiny_detection_records, wrap_recognizer


# --- registry ---------------------------------------------------------------

def test_builtin_backends_are_registered():
    assert {"reference-tfidf", "stub-detector", "distilbert"} <= set(
        available("detector")
    )
    assert {"lexicon", "stub-recognizer", "roberta-ner"} <= set(
        available("recognizer")
    )
    assert {"stub-infiller", "mlm"} <= set(available("infiller"))
    names = available()
    assert names == sorted(names)


def test_register_rejects_duplicates():
    with pytest.raises(ValidationError):
        register("detector", "reference-tfidf", lambda: TfidfLogisticDetector)


def test_register_rejects_unknown_kind():
    with pytest.raises(ValidationError):
        register("oracle", "x", lambda: TfidfLogisticDetector)


def test_unknown_name_lists_known_ones():
    with pytest.raises(ModelLoadError, match="known.*reference-tfidf"):
        detector_class("no-such-backend")


def test_structural_check_rejects_foreign_class():
    register("detector", "malformed-test", lambda: dict)
    try:
        with pytest.raises(BackendError):
            detector_class("malformed-test")
    finally:
        del backends._REGISTRY[("detector", "malformed-test")]


def test_structural_check_rejects_abstract_class():
    class HalfDone(DetectorBackend):
        name = "half-done-test"

    register("detector", "half-done-test", lambda: HalfDone)
    try:
        with pytest.raises(BackendError, match="abstract"):
            detector_class("half-done-test")
    finally:
        del backends._REGISTRY[("detector", "half-done-test")]


def test_lookup_returns_classes():
    assert detector_class("reference-tfidf") is TfidfLogisticDetector
    assert recognizer_class("lexicon") is LexiconRecognizer
    assert infiller_class("stub-infiller") is StubInfiller
    assert stub_backends() == {
        "detector": StubDetector,
        "recognizer": StubRecognizer,
        "infiller": StubInfiller,
    }


# --- model-id resolution ----------------------------------------------------

def test_resolve_detector_from_directory(tmp_path):
    examples = [derive_spans(r) for r in tiny_detection_records()]
    detector, _ = train_detector(examples, examples, TfidfLogisticDetector())
    save_detector(detector, tmp_path / "model")

    resolved = resolve_detector(str(tmp_path / "model"))
    assert resolved.model_id == detector.model_id
    text = examples[0].text
    assert resolved.backend.predict_proba([text]) == detector.backend.predict_proba(
        [text]
    )


def test_resolve_detector_stub_scheme(tmp_path):
    path = tmp_path / "det.json"
    path.write_text(json.dumps({"table": {CANONICAL: 0.9}, "default": 0.2}))
    detector = resolve_detector(f"stub-detector:{path}")
    assert detector.model_id == f"stub-detector:{path}"
    assert detector.backend.predict_proba([CANONICAL, "something else"]) == [0.9, 0.2]


def test_resolve_detector_failures(tmp_path):
    with pytest.raises(ModelLoadError):
        resolve_detector("no-scheme-no-dir")
    with pytest.raises(ModelLoadError):
        resolve_detector(f"stub-detector:{tmp_path / 'missing.json'}")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ModelLoadError):
        resolve_detector(f"stub-detector:{bad}")
    notable = tmp_path / "notable.json"
    notable.write_text(json.dumps({"rows": {}}))
    with pytest.raises(ModelLoadError, match="table"):
        resolve_detector(f"stub-detector:{notable}")


def test_resolve_recognizer_from_directory(tmp_path):
    recognizer = wrap_recognizer(
        LexiconRecognizer(phrases={"pseudo-scientific hype"}), "lex-test"
    )
    save_recognizer(recognizer, tmp_path / "rec")
    resolved = resolve_recognizer(str(tmp_path / "rec"))
    assert isinstance(resolved, TrainedRecognizer)
    spans = resolved.backend.predict(CANONICAL)
    assert [(s.start, s.end) for s in spans] == [(14, 36)]


def test_resolve_recognizer_lexicon_scheme(tmp_path):
    path = tmp_path / "phrases.txt"
    path.write_text("pseudo-scientific hype\n")
    recognizer = resolve_recognizer(f"lexicon:{path}")
    spans = recognizer.backend.predict(CANONICAL)
    assert [(s.start, s.end) for s in spans] == [(14, 36)]
    with pytest.raises(ModelLoadError):
        resolve_recognizer(f"lexicon:{tmp_path / 'nowhere.txt'}")


def test_resolve_recognizer_stub_scheme(tmp_path):
    path = tmp_path / "rec.json"
    path.write_text(json.dumps({"table": {CANONICAL: [[14, 36]]}}))
    recognizer = resolve_recognizer(f"stub-recognizer:{path}")
    spans = recognizer.backend.predict(CANONICAL)
    assert [(s.start, s.end) for s in spans] == [(14, 36)]
    # default missing policy for file-backed stubs is silence, not an error
    assert recognizer.backend.predict("unknown text") == []


def test_resolve_infiller_stub_scheme(tmp_path):
    path = tmp_path / "fill.json"
    path.write_text(
        json.dumps({"table": {"a [MASK] here": [["word", 0.5], ["term", 0.25]]}})
    )
    infiller = resolve_infiller(f"stub-infiller:{path}")
    assert infiller.fill("a [MASK] here", 2) == [("word", 0.5), ("term", 0.25)]
    with pytest.raises(BackendError):
        infiller.fill("no mask here", 1)
    with pytest.raises(ModelLoadError):
        resolve_infiller("unregistered:thing")


# --- behavior ---------------------------------------------------------------

def test_reference_training_is_deterministic():
    examples = [derive_spans(r) for r in tiny_detection_records()]
    first, _ = train_detector(examples, examples, TfidfLogisticDetector())
    second, _ = train_detector(examples, examples, TfidfLogisticDetector())
    texts = [e.text for e in examples[:8]]
    assert first.backend.predict_proba(texts) == second.backend.predict_proba(texts)


def test_stub_detector_save_load_round_trip(tmp_path):
    detector = StubDetector({"a": 0.7}, default=0.1)
    detector.save(tmp_path)
    loaded = StubDetector.load(tmp_path)
    assert loaded.predict_proba(["a", "b"]) == [0.7, 0.1]


def test_stub_infiller_passes_contract_probe():
    _, _, infiller = canonical_stubs()
    diagnostics = validate_infiller(
        StubInfiller(infiller.table, missing="empty")
    )
    assert diagnostics.ok, diagnostics.violations
