import json

import pytest
from hypothesis import given, strategies as st

from fairtext.backends.stubs import StubDetector
from fairtext.debias import (
    CandidateScore,
    DebiasResult,
    DebiasStatus,
    Selection,
    rescore,
    select,
)
from fairtext.errors import ValidationError
from fairtext.masking import FillCandidate

from helpers import wrap_detector


def _fill(text):
    return FillCandidate(tokens=text.split(), log_score=0.0, text=text)


def _detector(table):
    return wrap_detector(StubDetector(table))


# --- rescore ----------------------------------------------------------------

def test_rescore_sorts_ascending():
    detector = _detector({"aa": 0.8, "bb": 0.1, "cc": 0.4})
    scored = rescore(detector, [_fill("aa"), _fill("bb"), _fill("cc")])
    assert scored == [("bb", 0.1), ("cc", 0.4), ("aa", 0.8)]


def test_rescore_breaks_ties_lexicographically():
    detector = _detector({"zz": 0.3, "aa": 0.3})
    scored = rescore(detector, [_fill("zz"), _fill("aa")])
    assert scored == [("aa", 0.3), ("zz", 0.3)]


def test_rescore_singleton():
    detector = _detector({"only": 0.42})
    assert rescore(detector, [_fill("only")]) == [("only", 0.42)]


def test_rescore_rejects_empty():
    with pytest.raises(ValidationError):
        rescore(_detector({}), [])


# --- select -----------------------------------------------------------------

def test_select_mixed_acceptance():
    # below threshold; above threshold but below original; above both
    selection = select(0.9, [("a", 0.3), ("b", 0.6), ("c", 0.95)], threshold=0.5)
    assert [c.accepted for c in selection.candidates] == [True, True, False]
    assert selection.status is DebiasStatus.DEBIASED


def test_select_second_disjunct_alone():
    selection = select(0.4, [("a", 0.35), ("b", 0.45)], threshold=0.3)
    assert [c.accepted for c in selection.candidates] == [True, False]


def test_select_all_rejected_is_best_effort():
    selection = select(0.2, [("a", 0.6), ("b", 0.7)], threshold=0.5)
    assert selection.status is DebiasStatus.BEST_EFFORT
    assert not any(c.accepted for c in selection.candidates)
    assert len(selection.candidates) == 2  # ranking still reported


def test_select_boundary_is_strict():
    selection = select(0.5, [("a", 0.5)], threshold=0.5)
    assert selection.candidates[0].accepted is False


def test_select_input_validation():
    with pytest.raises(ValidationError):
        select(0.5, [])
    with pytest.raises(ValidationError):
        select(0.5, [("a", 0.9), ("b", 0.1)])
    with pytest.raises(ValidationError):
        select(0.5, [("a", 0.1)], threshold=1.5)


def test_select_keeps_candidate_order():
    selection = select(0.9, [("x", 0.1), ("y", 0.2), ("z", 0.3)])
    assert [c.text for c in selection.candidates] == ["x", "y", "z"]
    assert selection.candidates[0].probability == min(
        c.probability for c in selection.candidates
    )


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=8),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_select_matches_bare_disjunction(original, probs, threshold):
    rescored = [(f"c{i}", p) for i, p in enumerate(sorted(probs))]
    selection = select(original, rescored, threshold)
    for candidate in selection.candidates:
        expected = candidate.probability < threshold or candidate.probability < original
        assert candidate.accepted == expected
    assert (selection.status is DebiasStatus.DEBIASED) == any(
        c.accepted for c in selection.candidates
    )


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=6),
    st.floats(min_value=0.0, max_value=1.0),
    st.data(),
)
def test_lowering_a_probability_never_loses_acceptance(
    original, probs, threshold, data
):
    probs = sorted(probs)
    idx = data.draw(st.integers(min_value=0, max_value=len(probs) - 1))
    target = probs[idx]
    lowered = data.draw(st.floats(min_value=0.0, max_value=target))

    before = select(original, [(f"c{i}", p) for i, p in enumerate(probs)], threshold)
    was_accepted = before.candidates[idx].accepted

    probs2 = sorted(probs[:idx] + [lowered] + probs[idx + 1 :])
    after = select(original, [(f"c{i}", p) for i, p in enumerate(probs2)], threshold)
    now_accepted = after.candidates[probs2.index(lowered)].accepted
    assert not (was_accepted and not now_accepted)


# --- result serialization ---------------------------------------------------

def _result(**overrides):
    base = dict(
        original_text="orig",
        original_probability=0.8,
        candidates=[CandidateScore("fixed", 0.2, True)],
        status=DebiasStatus.DEBIASED,
    )
    base.update(overrides)
    return DebiasResult(**base)


def test_result_json_key_order():
    payload = json.loads(_result().to_json())
    assert list(payload) == [
        "original_text",
        "original_probability",
        "status",
        "candidates",
    ]
    assert payload["status"] == "DEBIASED"
    assert payload["candidates"] == [
        {"text": "fixed", "probability": 0.2, "accepted": True}
    ]


def test_result_diagnostic_and_trace_are_optional():
    result = _result(diagnostic="why", trace=[{"stage": "detect"}])
    assert "trace" not in result.to_dict()
    with_trace = result.to_dict(include_trace=True)
    assert with_trace["diagnostic"] == "why"
    assert with_trace["trace"] == [{"stage": "detect"}]


def test_selection_round_trips_into_result():
    selection = select(0.9, [("better", 0.1)])
    assert isinstance(selection, Selection)
    result = _result(candidates=selection.candidates, status=selection.status)
    assert json.loads(result.to_json())["candidates"][0]["accepted"] is True
