"""CPU-only backends: TF-IDF logistic regression detection and a phrase
lexicon recognizer. These train in seconds and need no pretrained weights,
so they anchor the test suite and serve as the fallback runtime."""

from __future__ import annotations

import logging
from pathlib import Path

import joblib
from sklearn.feature_extraction.text import TfidfVectorizer
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import log_loss

from ..dataset import Label, Tag, TokenTagSequence
from ..detection import (
    DetectorBackend,
    EpochMetrics,
    TrainingConfig,
    binary_f1,
    truncate_to_tokens,
)
from ..errors import BackendError, SingleClassError
from ..recognition import (
    BiasSpan,
    RecognizerBackend,
    lexicon_recognize,
    load_lexicon,
    save_lexicon,
    sequences_to_phrases,
    token_f1,
)

logger = logging.getLogger(__name__)

_MODEL_FILE = "model.joblib"
_LEXICON_FILE = "lexicon.txt"


class TfidfLogisticDetector(DetectorBackend):
    """Word/bigram TF-IDF features into a logistic regression.

    The fit is convex, so epochs and batch size from the config do not
    apply; a single pseudo-epoch entry reports dev loss and F1. Runs are
    deterministic for a fixed seed and input order.
    """

    name = "reference-tfidf"

    def __init__(self) -> None:
        self._vectorizer: TfidfVectorizer | None = None
        self._classifier: LogisticRegression | None = None
        self._max_tokens = TrainingConfig().max_sequence_length

    def fit(
        self,
        train: list[tuple[str, Label]],
        dev: list[tuple[str, Label]],
        config: TrainingConfig,
    ) -> list[EpochMetrics]:
        labels = {label for _, label in train}
        if len(labels) < 2:
            raise SingleClassError("reference detector needs both classes")
        self._max_tokens = config.max_sequence_length
        texts = [truncate_to_tokens(t, self._max_tokens) for t, _ in train]
        y = [1 if label is Label.BIASED else 0 for _, label in train]

        self._vectorizer = TfidfVectorizer(ngram_range=(1, 2), sublinear_tf=True)
        self._classifier = LogisticRegression(
            max_iter=1000, random_state=config.seed, C=1.0
        )
        features = self._vectorizer.fit_transform(texts)
        self._classifier.fit(features, y)
        if config.epochs != 1:
            logger.debug("convex fit; epochs=%d collapses to one", config.epochs)

        eval_pairs = dev if dev else train
        probs = self.predict_proba([t for t, _ in eval_pairs])
        gold = [label for _, label in eval_pairs]
        pred = [Label.BIASED if p >= 0.5 else Label.NON_BIASED for p in probs]
        dev_loss = float(log_loss([1 if g is Label.BIASED else 0 for g in gold], probs))
        return [EpochMetrics(epoch=0, dev_loss=dev_loss, dev_f1=binary_f1(gold, pred))]

    def predict_proba(self, texts: list[str]) -> list[float]:
        if self._vectorizer is None or self._classifier is None:
            raise BackendError("detector backend is not fitted")
        truncated = [truncate_to_tokens(t, self._max_tokens) for t in texts]
        features = self._vectorizer.transform(truncated)
        positive = list(self._classifier.classes_).index(1)
        return [float(p) for p in self._classifier.predict_proba(features)[:, positive]]

    def save(self, directory: Path) -> None:
        if self._vectorizer is None or self._classifier is None:
            raise BackendError("nothing to save: backend is not fitted")
        joblib.dump(
            {
                "vectorizer": self._vectorizer,
                "classifier": self._classifier,
                "max_tokens": self._max_tokens,
            },
            Path(directory) / _MODEL_FILE,
        )

    @classmethod
    def load(cls, directory: Path) -> "TfidfLogisticDetector":
        path = Path(directory) / _MODEL_FILE
        if not path.exists():
            raise BackendError(f"missing model payload: {path}")
        payload = joblib.load(path)
        backend = cls()
        backend._vectorizer = payload["vectorizer"]
        backend._classifier = payload["classifier"]
        backend._max_tokens = payload["max_tokens"]
        return backend


class LexiconRecognizer(RecognizerBackend):
    """Recognizes spans by matching a phrase lexicon against the text.

    fit() harvests the lexicon from the B/I runs of the training
    sequences; the backend can also be constructed straight from a phrase
    set (see the lexicon: model id scheme).
    """

    name = "lexicon"

    def __init__(self, phrases: set[str] | None = None) -> None:
        self.phrases = phrases

    def fit(
        self,
        train: list[TokenTagSequence],
        dev: list[TokenTagSequence],
        config: TrainingConfig,
    ) -> list[EpochMetrics]:
        self.phrases = sequences_to_phrases(train)
        eval_seqs = dev if dev else train
        gold: list[Tag] = []
        pred: list[Tag] = []
        for seq in eval_seqs:
            text, offsets = _join_tokens(seq.tokens)
            spans = self.predict(text)
            gold.extend(seq.tags)
            pred.extend(_cover_tags(offsets, spans))
        return [EpochMetrics(epoch=0, dev_loss=0.0, dev_f1=token_f1(gold, pred))]

    def predict(self, text: str) -> list[BiasSpan]:
        if self.phrases is None:
            raise BackendError("lexicon backend has no phrases: fit or load first")
        if not self.phrases:
            return []
        return lexicon_recognize(self.phrases, text)

    def save(self, directory: Path) -> None:
        if self.phrases is None:
            raise BackendError("nothing to save: backend has no phrases")
        save_lexicon(self.phrases, Path(directory) / _LEXICON_FILE)

    @classmethod
    def load(cls, directory: Path) -> "LexiconRecognizer":
        path = Path(directory) / _LEXICON_FILE
        if not path.exists():
            raise BackendError(f"missing lexicon payload: {path}")
        return cls(phrases=load_lexicon(path))


def _join_tokens(tokens: list[str]) -> tuple[str, list[tuple[int, int]]]:
    """Single-space joined text plus each token's (start, end) in it."""
    offsets = []
    cursor = 0
    for token in tokens:
        offsets.append((cursor, cursor + len(token)))
        cursor += len(token) + 1
    return " ".join(tokens), offsets


def _cover_tags(offsets: list[tuple[int, int]], spans: list[BiasSpan]) -> list[Tag]:
    """Binary tags for tokens by span overlap: first covered token of a
    run gets B, the rest I."""
    tags: list[Tag] = []
    previous_covered = False
    for start, end in offsets:
        covered = any(s.start < end and start < s.end for s in spans)
        if not covered:
            tags.append(Tag.O)
        elif previous_covered:
            tags.append(Tag.I)
        else:
            tags.append(Tag.B)
        previous_covered = covered
    return tags
