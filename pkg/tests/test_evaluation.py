import random

import pytest
from hypothesis import given, strategies as st

from fairtext.backends.stubs import StubDetector, StubRecognizer
from fairtext.dataset import AnnotatedExample, Label
from fairtext.errors import ValidationError
from fairtext.evaluation import (
    ConfusionCounts,
    MetricsReport,
    evaluate_detection,
    evaluate_recognition,
    metrics,
    render_table,
)

from helpers import brute_force_report, record, wrap_detector, wrap_recognizer

CANON = "Don't buy the pseudo-scientific hype about tornadoes and climate change"


# --- metrics ----------------------------------------------------------------

def test_metrics_worked_example():
    report = metrics(ConfusionCounts(tp=2, fp=1, fn=2, tn=5))
    assert abs(report.precision - 2 / 3) < 1e-12
    assert abs(report.recall - 0.5) < 1e-12
    assert abs(report.f1 - 4 / 7) < 1e-12
    assert abs(report.accuracy - 0.7) < 1e-12


def test_metrics_undefined_ratios_are_none():
    report = metrics(ConfusionCounts(tn=10))
    assert report.precision is None
    assert report.recall is None
    assert report.f1 is None
    assert report.accuracy == 1.0


def test_metrics_zero_f1_denominator():
    report = metrics(ConfusionCounts(fp=1, fn=1))
    assert report.precision == 0.0
    assert report.recall == 0.0
    assert report.f1 is None
    assert report.accuracy == 0.0


def test_metrics_empty_counts():
    report = metrics(ConfusionCounts())
    assert (report.precision, report.recall, report.f1, report.accuracy) == (
        None,
        None,
        None,
        None,
    )


def test_metrics_perfect():
    report = metrics(ConfusionCounts(tp=5, tn=5))
    assert (report.precision, report.recall, report.f1, report.accuracy) == (
        1.0,
        1.0,
        1.0,
        1.0,
    )


def test_metrics_rejects_negative_counts():
    with pytest.raises(ValidationError):
        metrics(ConfusionCounts(tp=-1))


def test_flipped_is_involution():
    counts = ConfusionCounts(tp=3, fp=1, fn=4, tn=2)
    assert counts.flipped().flipped() == counts
    assert counts.flipped().to_dict() == {"tp": 2, "fp": 4, "fn": 1, "tn": 3}


def _counts_from(gold, pred):
    counts = ConfusionCounts()
    for g, p in zip(gold, pred):
        if g and p:
            counts.tp += 1
        elif g:
            counts.fn += 1
        elif p:
            counts.fp += 1
        else:
            counts.tn += 1
    return counts


@given(
    st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=40)
)
def test_metrics_agree_with_brute_force(pairs):
    gold = [g for g, _ in pairs]
    pred = [p for _, p in pairs]
    report = metrics(_counts_from(gold, pred))
    expected = brute_force_report(gold, pred)
    for name in ("precision", "recall", "f1", "accuracy"):
        got = getattr(report, name)
        want = expected[name]
        if want is None:
            assert got is None
        else:
            assert abs(got - want) < 1e-12


def test_f1_harmonic_identity():
    rng = random.Random(3)
    for _ in range(200):
        counts = ConfusionCounts(
            tp=rng.randrange(6), fp=rng.randrange(6), fn=rng.randrange(6),
            tn=rng.randrange(6),
        )
        report = metrics(counts)
        if report.f1 is not None:
            p, r = report.precision, report.recall
            assert abs(report.f1 - 2 * p * r / (p + r)) < 1e-12


# --- detector evaluation ----------------------------------------------------

def _balanced_records():
    rows = []
    for i in range(4):
        rows.append(record(f"the corrupt plan {i}", biased=True, words=["corrupt"]))
        rows.append(record(f"the reviewed plan {i}", biased=False))
    return rows


def test_constant_positive_detector():
    detector = wrap_detector(StubDetector({}, default=0.9))
    result = evaluate_detection(detector, _balanced_records())
    assert result.counts.to_dict() == {"tp": 4, "fp": 4, "fn": 0, "tn": 0}
    assert result.report.recall == 1.0
    assert result.report.precision == 0.5
    assert result.report.accuracy == 0.5
    flipped = result.per_class[Label.NON_BIASED.value]
    assert flipped.precision is None
    assert flipped.recall == 0.0


def test_oracle_detector_scores_perfectly():
    rows = _balanced_records()
    table = {r.text: 0.9 if r.label is Label.BIASED else 0.1 for r in rows}
    result = evaluate_detection(wrap_detector(StubDetector(table)), rows)
    assert result.counts.to_dict() == {"tp": 4, "fp": 0, "fn": 0, "tn": 4}
    assert result.report.f1 == 1.0


def test_evaluation_is_order_invariant():
    rows = _balanced_records()
    table = {r.text: 0.9 if r.label is Label.BIASED else 0.1 for r in rows}
    detector = wrap_detector(StubDetector(table))
    forward = evaluate_detection(detector, rows)
    backward = evaluate_detection(detector, list(reversed(rows)))
    assert forward.counts == backward.counts
    assert forward.dataset_fingerprint == backward.dataset_fingerprint


def test_detection_payload_shape():
    detector = wrap_detector(StubDetector({}, default=0.9), model_id="stub-det")
    payload = evaluate_detection(detector, _balanced_records(), threshold=0.4).to_dict()
    assert list(payload) == [
        "task",
        "positive_class",
        "model_id",
        "dataset_fingerprint",
        "threshold",
        "counts",
        "metrics",
        "per_class",
    ]
    assert payload["task"] == "detection"
    assert payload["positive_class"] == "BIASED"
    assert payload["threshold"] == 0.4
    assert set(payload["per_class"]) == {"BIASED", "NON_BIASED"}


def test_detection_rejects_empty_and_unlabelled():
    detector = wrap_detector(StubDetector({}, default=0.9))
    with pytest.raises(ValidationError):
        evaluate_detection(detector, [])
    bare = AnnotatedExample(text="plain words here", spans=[], label=None)
    with pytest.raises(ValidationError):
        evaluate_detection(detector, [bare])


# --- recognizer evaluation --------------------------------------------------

def _gold_example():
    return AnnotatedExample(
        text=CANON,
        spans=[(14, 36, "pseudo-scientific hype")],
        label=Label.BIASED,
    )


def test_recognizer_matching_gold_scores_one():
    recognizer = wrap_recognizer(StubRecognizer({CANON: [(14, 36)]}))
    result = evaluate_recognition(recognizer, [_gold_example()])
    assert result.token_report.f1 == 1.0
    assert result.span_report.f1 == 1.0
    assert result.n_examples == 1


def test_silent_recognizer_has_zero_recall():
    recognizer = wrap_recognizer(StubRecognizer({}, missing="empty"))
    result = evaluate_recognition(recognizer, [_gold_example()])
    assert result.token_report.recall == 0.0
    assert result.token_report.precision is None
    assert result.token_counts.fn == 2  # two gold tokens


def test_partial_overlap_splits_token_and_span_views():
    recognizer = wrap_recognizer(StubRecognizer({CANON: [(14, 31)]}))
    result = evaluate_recognition(recognizer, [_gold_example()])
    assert result.token_counts.tp == 1
    assert result.token_counts.fn == 1
    assert result.token_counts.fp == 0
    assert result.span_counts.tp == 0
    assert result.span_counts.fp == 1
    assert result.span_counts.fn == 1


def test_recognition_payload_shape():
    recognizer = wrap_recognizer(StubRecognizer({CANON: [(14, 36)]}), "stub-rec")
    payload = evaluate_recognition(recognizer, [_gold_example()]).to_dict()
    assert list(payload) == [
        "task",
        "positive_class",
        "model_id",
        "n_examples",
        "token",
        "span_exact",
    ]
    assert payload["positive_class"] == "BIAS"
    assert set(payload["token"]) == {"counts", "metrics"}


def test_recognition_rejects_empty():
    with pytest.raises(ValidationError):
        evaluate_recognition(wrap_recognizer(StubRecognizer({})), [])


# --- table rendering --------------------------------------------------------

def test_render_table_percentages_and_na():
    rows = [
        ("model-a", MetricsReport(2 / 3, 0.5, 4 / 7, 0.7)),
        ("b", MetricsReport(None, None, None, 1.0)),
    ]
    table = render_table(rows)
    lines = table.splitlines()
    assert lines[0].split() == ["Model", "PREC", "REC", "F1", "ACC"]
    assert lines[1].split() == ["model-a", "66.7", "50.0", "57.1", "70.0"]
    assert lines[2].split() == ["b", "n/a", "n/a", "n/a", "100.0"]
    assert all(line == line.rstrip() for line in lines)


def test_render_table_raw_mode():
    table = render_table([("m", MetricsReport(0.5714, 0.5, None, 0.7))], percent=False)
    assert "0.5714" in table
    assert "n/a" in table


def test_render_table_rejects_empty():
    with pytest.raises(ValidationError):
        render_table([])
