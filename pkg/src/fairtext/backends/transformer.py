"""Pretrained-transformer backends: a fine-tunable sequence classifier
for detection, a token classifier for span recognition, and a masked
language model for infilling.

These need the optional extras (torch + transformers) and local model
weights. Weights are loaded from the local cache only, unless
FAIRTEXT_ALLOW_DOWNLOAD=1; FAIRTEXT_CACHE overrides the cache directory.
"""

from __future__ import annotations

import copy
import logging
import os
from pathlib import Path

from ..dataset import Label, Tag, TokenTagSequence
from ..detection import (
    DetectorBackend,
    EpochMetrics,
    TrainingConfig,
    binary_f1,
)
from ..errors import BackendError, ModelLoadError
from ..masking import InfillerBackend
from ..recognition import BiasSpan, RecognizerBackend, merge_spans, token_f1

try:
    import torch
    from torch.utils.data import DataLoader, TensorDataset
    from transformers import (
        AutoModelForMaskedLM,
        AutoModelForSequenceClassification,
        AutoModelForTokenClassification,
        AutoTokenizer,
    )

    _IMPORT_ERROR: Exception | None = None
except ImportError as exc:  # extras not installed
    _IMPORT_ERROR = exc

logger = logging.getLogger(__name__)

CACHE_ENV = "FAIRTEXT_CACHE"
DOWNLOAD_ENV = "FAIRTEXT_ALLOW_DOWNLOAD"

_HF_SUBDIR = "hf"
_TAGS = [Tag.O, Tag.B, Tag.I]
_TAG2ID = {tag: i for i, tag in enumerate(_TAGS)}
_ID2LABEL = {i: tag.value for i, tag in enumerate(_TAGS)}
_LABEL2ID = {v: k for k, v in _ID2LABEL.items()}


def _require_extras() -> None:
    if _IMPORT_ERROR is not None:
        raise BackendError(
            "transformer backends need the optional extras: "
            "pip install 'fairtext[transformers]'"
        ) from _IMPORT_ERROR


def _pretrained_kwargs() -> dict:
    kwargs: dict = {
        "local_files_only": os.environ.get(DOWNLOAD_ENV, "") != "1",
    }
    cache = os.environ.get(CACHE_ENV)
    if cache:
        kwargs["cache_dir"] = cache
    return kwargs


def _load_pretrained(
    model_cls, tokenizer_source: str, tokenizer_kwargs: dict | None = None, **model_kwargs
):
    try:
        tokenizer = AutoTokenizer.from_pretrained(
            tokenizer_source, **_pretrained_kwargs(), **(tokenizer_kwargs or {})
        )
        model = model_cls.from_pretrained(
            tokenizer_source, **_pretrained_kwargs(), **model_kwargs
        )
    except (OSError, ValueError) as exc:
        raise ModelLoadError(
            f"cannot load pretrained weights for {tokenizer_source!r}; "
            f"set {DOWNLOAD_ENV}=1 to allow fetching ({exc})"
        ) from exc
    model.eval()
    return tokenizer, model


class DistilBertDetector(DetectorBackend):
    """Sequence classifier with a single-logit sigmoid head trained with
    binary cross-entropy."""

    name = "distilbert"

    def __init__(self, model_name: str = "distilbert-base-uncased") -> None:
        _require_extras()
        self.model_name = model_name
        self._tokenizer = None
        self._model = None
        self._max_tokens = TrainingConfig().max_sequence_length

    def _ensure_loaded(self) -> None:
        if self._model is None:
            self._tokenizer, self._model = _load_pretrained(
                AutoModelForSequenceClassification, self.model_name, num_labels=1
            )

    def _encode(self, texts: list[str]):
        return self._tokenizer(
            texts,
            truncation=True,
            max_length=self._max_tokens,
            padding=True,
            return_tensors="pt",
        )

    def fit(
        self,
        train: list[tuple[str, Label]],
        dev: list[tuple[str, Label]],
        config: TrainingConfig,
    ) -> list[EpochMetrics]:
        self._ensure_loaded()
        self._max_tokens = config.max_sequence_length
        torch.manual_seed(config.seed)

        encoded = self._encode([t for t, _ in train])
        targets = torch.tensor(
            [1.0 if label is Label.BIASED else 0.0 for _, label in train]
        )
        loader = DataLoader(
            TensorDataset(encoded["input_ids"], encoded["attention_mask"], targets),
            batch_size=config.batch_size,
            shuffle=True,
            generator=torch.Generator().manual_seed(config.seed),
        )
        optimizer = torch.optim.AdamW(
            self._model.parameters(), lr=config.learning_rate
        )
        loss_fn = torch.nn.BCEWithLogitsLoss()

        eval_pairs = dev if dev else train
        eval_texts = [t for t, _ in eval_pairs]
        eval_gold = [label for _, label in eval_pairs]
        eval_targets = torch.tensor(
            [1.0 if label is Label.BIASED else 0.0 for label in eval_gold]
        )

        history: list[EpochMetrics] = []
        best_f1 = -1.0
        best_state = None
        for epoch in range(config.epochs):
            self._model.train()
            for input_ids, attention_mask, y in loader:
                optimizer.zero_grad()
                logits = self._model(
                    input_ids=input_ids, attention_mask=attention_mask
                ).logits.squeeze(-1)
                loss_fn(logits, y).backward()
                optimizer.step()

            probs = torch.tensor(self.predict_proba(eval_texts))
            dev_loss = float(
                torch.nn.functional.binary_cross_entropy(probs, eval_targets)
            )
            pred = [Label.BIASED if p >= 0.5 else Label.NON_BIASED for p in probs]
            dev_f1 = binary_f1(eval_gold, pred)
            history.append(EpochMetrics(epoch=epoch, dev_loss=dev_loss, dev_f1=dev_f1))
            logger.info("epoch %d dev_loss=%.4f dev_f1=%.4f", epoch, dev_loss, dev_f1)
            if dev_f1 > best_f1:
                best_f1 = dev_f1
                best_state = copy.deepcopy(self._model.state_dict())

        if best_state is not None:
            self._model.load_state_dict(best_state)
        self._model.eval()
        return history

    def predict_proba(self, texts: list[str]) -> list[float]:
        self._ensure_loaded()
        self._model.eval()
        probs: list[float] = []
        with torch.no_grad():
            for i in range(0, len(texts), 32):
                encoded = self._encode(texts[i : i + 32])
                logits = self._model(**encoded).logits.squeeze(-1)
                probs.extend(torch.sigmoid(logits).reshape(-1).tolist())
        return probs

    def save(self, directory: Path) -> None:
        if self._model is None:
            raise BackendError("nothing to save: backend is not fitted")
        target = Path(directory) / _HF_SUBDIR
        self._tokenizer.save_pretrained(target)
        self._model.save_pretrained(target)

    @classmethod
    def load(cls, directory: Path) -> "DistilBertDetector":
        backend = cls.__new__(cls)
        _require_extras()
        source = str(Path(directory) / _HF_SUBDIR)
        backend.model_name = source
        backend._max_tokens = TrainingConfig().max_sequence_length
        backend._tokenizer, backend._model = _load_pretrained(
            AutoModelForSequenceClassification, source, num_labels=1
        )
        return backend


class RobertaRecognizer(RecognizerBackend):
    """Token classifier over {O, B-BIAS, I-BIAS}; predictions decode to
    character spans through the shared overlap-merge rule."""

    name = "roberta-ner"

    def __init__(self, model_name: str = "roberta-base") -> None:
        _require_extras()
        self.model_name = model_name
        self._tokenizer = None
        self._model = None
        self._max_tokens = TrainingConfig().max_sequence_length

    def _ensure_loaded(self) -> None:
        if self._model is None:
            self._tokenizer, self._model = _load_pretrained(
                AutoModelForTokenClassification,
                self.model_name,
                tokenizer_kwargs={"add_prefix_space": True},
                num_labels=len(_TAGS),
                id2label=_ID2LABEL,
                label2id=_LABEL2ID,
            )

    def _encode_sequences(self, sequences: list[TokenTagSequence]):
        encoded = self._tokenizer(
            [list(seq.tokens) for seq in sequences],
            is_split_into_words=True,
            truncation=True,
            max_length=self._max_tokens,
            padding=True,
            return_tensors="pt",
        )
        label_rows = []
        for i, seq in enumerate(sequences):
            previous = None
            row = []
            for word_id in encoded.word_ids(batch_index=i):
                if word_id is None or word_id == previous:
                    row.append(-100)
                else:
                    row.append(_TAG2ID[seq.tags[word_id]])
                previous = word_id
            label_rows.append(row)
        return encoded, torch.tensor(label_rows)

    def _predict_word_tags(self, sequences: list[TokenTagSequence]) -> list[list[Tag]]:
        self._model.eval()
        out: list[list[Tag]] = []
        with torch.no_grad():
            for i in range(0, len(sequences), 16):
                chunk = sequences[i : i + 16]
                encoded, _ = self._encode_sequences(chunk)
                predictions = self._model(**encoded).logits.argmax(dim=-1)
                for j, seq in enumerate(chunk):
                    tags = [Tag.O] * len(seq.tokens)
                    previous = None
                    for position, word_id in enumerate(encoded.word_ids(batch_index=j)):
                        if word_id is not None and word_id != previous:
                            tags[word_id] = _TAGS[int(predictions[j, position])]
                        previous = word_id
                    out.append(tags)
        return out

    def fit(
        self,
        train: list[TokenTagSequence],
        dev: list[TokenTagSequence],
        config: TrainingConfig,
    ) -> list[EpochMetrics]:
        self._ensure_loaded()
        self._max_tokens = config.max_sequence_length
        torch.manual_seed(config.seed)

        encoded, labels = self._encode_sequences(train)
        loader = DataLoader(
            TensorDataset(encoded["input_ids"], encoded["attention_mask"], labels),
            batch_size=config.batch_size,
            shuffle=True,
            generator=torch.Generator().manual_seed(config.seed),
        )
        optimizer = torch.optim.AdamW(
            self._model.parameters(), lr=config.learning_rate
        )

        eval_seqs = dev if dev else train
        history: list[EpochMetrics] = []
        best_f1 = -1.0
        best_state = None
        for epoch in range(config.epochs):
            self._model.train()
            total_loss = 0.0
            for input_ids, attention_mask, y in loader:
                optimizer.zero_grad()
                loss = self._model(
                    input_ids=input_ids, attention_mask=attention_mask, labels=y
                ).loss
                loss.backward()
                optimizer.step()
                total_loss += float(loss)

            predicted = self._predict_word_tags(eval_seqs)
            scores = [
                token_f1(list(seq.tags), tags)
                for seq, tags in zip(eval_seqs, predicted)
            ]
            dev_f1 = sum(scores) / len(scores)
            history.append(
                EpochMetrics(
                    epoch=epoch, dev_loss=total_loss / max(1, len(loader)), dev_f1=dev_f1
                )
            )
            logger.info("epoch %d dev_f1=%.4f", epoch, dev_f1)
            if dev_f1 > best_f1:
                best_f1 = dev_f1
                best_state = copy.deepcopy(self._model.state_dict())

        if best_state is not None:
            self._model.load_state_dict(best_state)
        self._model.eval()
        return history

    def predict(self, text: str) -> list[BiasSpan]:
        self._ensure_loaded()
        self._model.eval()
        encoded = self._tokenizer(
            text,
            truncation=True,
            max_length=self._max_tokens,
            return_offsets_mapping=True,
            return_tensors="pt",
        )
        offsets = encoded.pop("offset_mapping")[0].tolist()
        with torch.no_grad():
            logits = self._model(**encoded).logits[0]
        probabilities = torch.softmax(logits, dim=-1)
        predictions = logits.argmax(dim=-1).tolist()
        word_ids = encoded.word_ids(batch_index=0)

        # word label = first-subtoken label; word extent spans all subtokens
        words: list[tuple[int, int, Tag, float]] = []
        for position, word_id in enumerate(word_ids):
            if word_id is None:
                continue
            start, end = offsets[position]
            tag = _TAGS[predictions[position]]
            score = float(probabilities[position, predictions[position]])
            if words and word_ids[position - 1] == word_id:
                prev_start, prev_end, prev_tag, prev_score = words[-1]
                words[-1] = (prev_start, max(prev_end, end), prev_tag, prev_score)
            else:
                words.append((start, end, tag, score))

        raw: list[BiasSpan] = []
        current: tuple[int, int, float] | None = None
        for start, end, tag, score in words:
            if tag is Tag.B:
                if current:
                    raw.append(BiasSpan(current[0], current[1], "", current[2]))
                current = (start, end, score)
            elif tag is Tag.I:
                if current:
                    current = (current[0], end, min(current[2], score))
                else:
                    current = (start, end, score)
            else:
                if current:
                    raw.append(BiasSpan(current[0], current[1], "", current[2]))
                    current = None
        if current:
            raw.append(BiasSpan(current[0], current[1], "", current[2]))
        return merge_spans(raw, text)

    def save(self, directory: Path) -> None:
        if self._model is None:
            raise BackendError("nothing to save: backend is not fitted")
        target = Path(directory) / _HF_SUBDIR
        self._tokenizer.save_pretrained(target)
        self._model.save_pretrained(target)

    @classmethod
    def load(cls, directory: Path) -> "RobertaRecognizer":
        backend = cls.__new__(cls)
        _require_extras()
        source = str(Path(directory) / _HF_SUBDIR)
        backend.model_name = source
        backend._max_tokens = TrainingConfig().max_sequence_length
        backend._tokenizer, backend._model = _load_pretrained(
            AutoModelForTokenClassification,
            source,
            tokenizer_kwargs={"add_prefix_space": True},
            num_labels=len(_TAGS),
            id2label=_ID2LABEL,
            label2id=_LABEL2ID,
        )
        return backend


class MlmInfiller(InfillerBackend):
    """Masked-language-model infiller: top-k vocabulary tokens with their
    softmax probabilities for the single mask position. Subword
    continuation pieces and special tokens are skipped so every proposal
    drops into the slot as a standalone word."""

    name = "mlm"

    def __init__(self, model_name: str = "bert-base-uncased") -> None:
        _require_extras()
        self.model_name = model_name
        self._tokenizer, self._model = _load_pretrained(
            AutoModelForMaskedLM, model_name
        )
        self.mask_token = self._tokenizer.mask_token
        self._max_tokens = TrainingConfig().max_sequence_length

    def fill(self, text: str, k: int) -> list[tuple[str, float]]:
        if k < 1:
            raise BackendError(f"k must be >= 1, got {k}")
        encoded = self._tokenizer(
            text, truncation=True, max_length=self._max_tokens, return_tensors="pt"
        )
        mask_positions = (
            (encoded["input_ids"][0] == self._tokenizer.mask_token_id)
            .nonzero()
            .reshape(-1)
            .tolist()
        )
        if len(mask_positions) != 1:
            raise BackendError(
                f"expected exactly one {self.mask_token!r} placeholder, "
                f"found {len(mask_positions)}"
            )
        with torch.no_grad():
            logits = self._model(**encoded).logits[0, mask_positions[0]]
        probabilities = torch.softmax(logits, dim=-1)
        order = torch.argsort(probabilities, descending=True, stable=True).tolist()

        special = set(self._tokenizer.all_special_ids)
        fills: list[tuple[str, float]] = []
        for token_id in order:
            if token_id in special:
                continue
            piece = self._tokenizer.convert_ids_to_tokens(token_id)
            if piece.startswith("##"):
                continue
            word = self._tokenizer.convert_tokens_to_string([piece]).strip()
            if not word or any(ch.isspace() for ch in word):
                continue
            fills.append((word, float(probabilities[token_id])))
            if len(fills) == k:
                break
        return fills
