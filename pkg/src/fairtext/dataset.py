"""Ingestion of annotated news snippets and span/tag derivation.

The input data is a table of news snippets, each carrying a binary
bias label and an optional delimiter-separated list of biased words or
phrases. This module turns those rows into validated records, locates
the annotated phrases as character spans, encodes spans as BIO token
tags for sequence-labeling training, and produces reproducible
stratified splits.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from sklearn.model_selection import train_test_split

from .errors import DataFormatError, ValidationError

logger = logging.getLogger(__name__)

Tokenizer = Callable[[str], list[tuple[str, int, int]]]


class Label(Enum):
    BIASED = "BIASED"
    NON_BIASED = "NON_BIASED"


class MatchPolicy(Enum):
    ALL_OCCURRENCES = "all_occurrences"
    FIRST_OCCURRENCE = "first_occurrence"


class FileFormat(Enum):
    CSV = "csv"
    TSV = "tsv"
    JSONL = "jsonl"


class Tag(Enum):
    B = "B-BIAS"
    I = "I-BIAS"
    O = "O"


_TRUE_LABELS = {"biased", "bias", "1", "true", "yes"}
_FALSE_LABELS = {
    "non-biased", "nonbiased", "non_biased", "non biased",
    "unbiased", "neutral", "0", "false", "no",
}


def parse_label(value: str) -> Label:
    """Map a raw label cell to a Label; raises ValidationError otherwise."""
    norm = str(value).strip().lower()
    if norm in _TRUE_LABELS:
        return Label.BIASED
    if norm in _FALSE_LABELS:
        return Label.NON_BIASED
    raise ValidationError(f"unparseable label value: {value!r}")


@dataclass
class DatasetRecord:
    """One annotated news snippet with its metadata columns."""

    text: str
    label: Label
    biased_words: list[str] = field(default_factory=list)
    url: str | None = None
    source: str | None = None
    topic: str | None = None
    extras: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.text.strip():
            raise ValidationError("empty text")
        if self.label is Label.NON_BIASED and self.biased_words:
            raise ValidationError("non-biased record carries biased words")
        for word in self.biased_words:
            if not word:
                raise ValidationError("empty biased-word entry")


@dataclass
class AnnotatedExample:
    """A snippet with resolved character-offset spans for its biased phrases.

    ``warnings`` lists annotated phrases that could not be located in the
    text (the data is crowd-plus-manual and contains inexact annotations).
    """

    text: str
    spans: list[tuple[int, int, str]]
    label: Label
    warnings: list[str] = field(default_factory=list)

    def validate(self) -> None:
        prev_end = 0
        for start, end, surface in self.spans:
            if not (0 <= start < end <= len(self.text)):
                raise ValidationError(f"span ({start},{end}) out of bounds")
            if start < prev_end:
                raise ValidationError("spans overlap or are unsorted")
            if self.text[start:end] != surface:
                raise ValidationError(
                    f"surface {surface!r} != text slice {self.text[start:end]!r}"
                )
            prev_end = end


@dataclass
class TokenTagSequence:
    """Tokens with aligned BIO tags and character offsets."""

    tokens: list[str]
    tags: list[Tag]
    offsets: list[tuple[int, int]]

    def validate(self) -> None:
        if not (len(self.tokens) == len(self.tags) == len(self.offsets)):
            raise ValidationError("tokens/tags/offsets length mismatch")
        prev = Tag.O
        for tag in self.tags:
            if tag is Tag.I and prev is Tag.O:
                raise ValidationError("I-BIAS immediately follows O")
            prev = tag


@dataclass
class RejectedRow:
    row: int
    reason: str


@dataclass
class LoadResult:
    """Accepted records plus a reject entry for every row that failed
    validation; accepted + rejected always equals the input row count."""

    records: list[DatasetRecord]
    rejects: list[RejectedRow]

    def write_rejects(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rej in self.rejects:
                fh.write(json.dumps({"row": rej.row, "reason": rej.reason}) + "\n")


@dataclass
class ColumnMap:
    """Column-name mapping for the tabular formats; defaults match the
    distributed annotation files."""

    text: str = "text"
    label: str = "label"
    biased_words: str = "biased_words"
    url: str = "url"
    source: str = "source"
    topic: str = "topic"
    word_delimiter: str = ";"


def _parse_biased_words(cell, delimiter: str) -> list[str]:
    if cell is None:
        return []
    if isinstance(cell, (list, tuple)):
        return [str(w).strip() for w in cell if str(w).strip()]
    return [w.strip() for w in str(cell).split(delimiter) if w.strip()]


def _row_to_record(row: dict, columns: ColumnMap) -> DatasetRecord:
    text = str(row.get(columns.text) or "")
    label = parse_label(row.get(columns.label, ""))
    words = _parse_biased_words(row.get(columns.biased_words), columns.word_delimiter)
    known = {columns.text, columns.label, columns.biased_words,
             columns.url, columns.source, columns.topic}
    extras = {
        str(k): str(v) for k, v in row.items()
        if k not in known and v is not None and str(v) != ""
    }

    def opt(name: str) -> str | None:
        value = row.get(name)
        return str(value) if value not in (None, "") else None

    record = DatasetRecord(
        text=text,
        label=label,
        biased_words=words,
        url=opt(columns.url),
        source=opt(columns.source),
        topic=opt(columns.topic),
        extras=extras,
    )
    record.validate()
    return record


def _iter_rows(path: Path, fmt: FileFormat) -> Iterable[dict]:
    if fmt is FileFormat.JSONL:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)
        return
    delimiter = "\t" if fmt is FileFormat.TSV else ","
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        yield from reader


def load_dataset(
    path: str | Path,
    format: FileFormat | None = None,
    columns: ColumnMap | None = None,
) -> LoadResult:
    """Load annotated records from a CSV/TSV/JSONL file.

    Rows violating record invariants (empty text, unparseable label,
    non-biased rows carrying biased words) are collected into the rejects
    list, never silently dropped. Missing file or missing text/label
    columns raise.
    """
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"no such file: {path}")
    columns = columns or ColumnMap()
    if format is None:
        suffix = path.suffix.lower().lstrip(".")
        try:
            format = FileFormat(suffix)
        except ValueError:
            raise DataFormatError(
                f"cannot infer format from suffix {path.suffix!r}; pass format="
            )

    records: list[DatasetRecord] = []
    rejects: list[RejectedRow] = []
    saw_rows = False
    for row_no, row in enumerate(_iter_rows(path, format), start=1):
        saw_rows = True
        if columns.text not in row or columns.label not in row:
            missing = [c for c in (columns.text, columns.label) if c not in row]
            raise DataFormatError(f"missing required column(s): {missing}")
        try:
            records.append(_row_to_record(row, columns))
        except ValidationError as err:
            rejects.append(RejectedRow(row=row_no, reason=str(err)))
    if not saw_rows:
        logger.warning("no data rows in %s", path)
    if rejects:
        logger.warning("%d of %d rows rejected while loading %s",
                       len(rejects), len(records) + len(rejects), path)
    return LoadResult(records=records, rejects=rejects)


# ---------------------------------------------------------------------------
# Phrase matching (shared with the lexicon recognizer)
# ---------------------------------------------------------------------------

_WORD_CHARS = re.compile(r"\w")


def _is_boundary(text: str, start: int, end: int) -> bool:
    before_ok = start == 0 or not _WORD_CHARS.match(text[start - 1])
    after_ok = end == len(text) or not _WORD_CHARS.match(text[end])
    return before_ok and after_ok


def match_phrases(
    text: str,
    phrases: Iterable[str],
    policy: MatchPolicy = MatchPolicy.ALL_OCCURRENCES,
) -> tuple[list[tuple[int, int, str]], list[str]]:
    """Locate phrases in ``text`` case-insensitively at word boundaries.

    Longer phrases are matched before shorter ones; overlapping matches are
    resolved in favor of the earlier-starting, then longer, span. Returns
    (spans, unmatched) where spans are sorted and pairwise non-overlapping
    and unmatched lists phrases with no boundary match anywhere in the text.
    """
    candidates: list[tuple[int, int]] = []
    unmatched: list[str] = []
    seen: set[str] = set()
    ordered = sorted({p for p in phrases if p}, key=lambda p: (-len(p), p.lower()))
    for phrase in ordered:
        if phrase.lower() in seen:
            continue
        seen.add(phrase.lower())
        pattern = re.compile(re.escape(phrase), re.IGNORECASE)
        hits = [
            (m.start(), m.end())
            for m in pattern.finditer(text)
            if _is_boundary(text, m.start(), m.end())
        ]
        if not hits:
            unmatched.append(phrase)
            continue
        if policy is MatchPolicy.FIRST_OCCURRENCE:
            hits = hits[:1]
        candidates.extend(hits)

    candidates.sort(key=lambda s: (s[0], -(s[1] - s[0])))
    spans: list[tuple[int, int, str]] = []
    cursor = 0
    for start, end in candidates:
        if start < cursor:
            continue  # overlaps an earlier-starting (or longer) winner
        spans.append((start, end, text[start:end]))
        cursor = end
    return spans, unmatched


def derive_spans(
    record: DatasetRecord,
    match_policy: MatchPolicy = MatchPolicy.ALL_OCCURRENCES,
) -> AnnotatedExample:
    """Resolve a record's biased-word strings into character spans.

    Unmatchable annotations produce warnings on the example rather than
    failures.
    """
    record.validate()
    spans, unmatched = match_phrases(record.text, record.biased_words, match_policy)
    warnings = [f"no boundary match for biased word: {w!r}" for w in unmatched]
    example = AnnotatedExample(
        text=record.text, spans=spans, label=record.label, warnings=warnings
    )
    example.validate()
    return example


# ---------------------------------------------------------------------------
# BIO tagging
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\S+")


def whitespace_tokenize(text: str) -> list[tuple[str, int, int]]:
    """Split on whitespace, returning (token, start, end) triples."""
    return [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def to_token_tags(
    example: AnnotatedExample,
    tokenize: Tokenizer = whitespace_tokenize,
) -> TokenTagSequence:
    """Encode an example's spans as BIO tags over the given tokenization.

    A token whose offsets overlap a span gets B-BIAS if it is the first
    overlapping token of that span, else I-BIAS; everything else is O.
    """
    toks = tokenize(example.text)
    prev_start = 0
    for token, start, end in toks:
        if not (0 <= start < end <= len(example.text)):
            raise ValidationError(f"tokenizer offset ({start},{end}) out of bounds")
        if start < prev_start:
            raise ValidationError("tokenizer offsets decrease")
        prev_start = start

    tags = [Tag.O] * len(toks)
    for span_start, span_end, _ in example.spans:
        overlapping = [
            i for i, (_, ts, te) in enumerate(toks)
            if ts < span_end and te > span_start
        ]
        for rank, i in enumerate(overlapping):
            if tags[i] is not Tag.O:
                continue
            if rank == 0:
                tags[i] = Tag.B
            elif tags[i - 1] is Tag.O:
                tags[i] = Tag.B  # keep the sequence well-formed
            else:
                tags[i] = Tag.I

    seq = TokenTagSequence(
        tokens=[t for t, _, _ in toks],
        tags=tags,
        offsets=[(s, e) for _, s, e in toks],
    )
    seq.validate()
    return seq


def tags_to_char_spans(seq: TokenTagSequence) -> list[tuple[int, int]]:
    """Decode B/I runs back into character spans (inverse of to_token_tags
    for token-aligned spans)."""
    spans: list[tuple[int, int]] = []
    open_span: list[int] | None = None
    for tag, (start, end) in zip(seq.tags, seq.offsets):
        if tag is Tag.B:
            if open_span is not None:
                spans.append((open_span[0], open_span[1]))
            open_span = [start, end]
        elif tag is Tag.I and open_span is not None:
            open_span[1] = end
        else:
            if open_span is not None:
                spans.append((open_span[0], open_span[1]))
                open_span = None
    if open_span is not None:
        spans.append((open_span[0], open_span[1]))
    return spans


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def _largest_remainder(total: int, ratios: tuple[float, float, float]) -> list[int]:
    ideal = [total * r for r in ratios]
    counts = [int(x) for x in ideal]
    remainders = sorted(
        range(len(ratios)), key=lambda i: (ideal[i] - counts[i]), reverse=True
    )
    for i in range(total - sum(counts)):
        counts[remainders[i % len(ratios)]] += 1
    return counts


def _take(
    indices: list[int], labels: list[str], k: int, seed: int
) -> tuple[list[int], list[int]]:
    if k == 0:
        return [], indices
    if k == len(indices):
        return indices, []
    counts = Counter(labels)
    stratify = labels if len(counts) > 1 and min(counts.values()) >= 2 else None
    taken, rest = train_test_split(
        indices, train_size=k, random_state=seed, stratify=stratify
    )
    return list(taken), list(rest)


def split(
    records: list[DatasetRecord],
    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15),
    seed: int = 0,
) -> tuple[list[DatasetRecord], list[DatasetRecord], list[DatasetRecord]]:
    """Deterministic stratified train/dev/test split.

    Split sizes come from the ratios by largest-remainder apportionment;
    stratification falls back to a plain shuffle when a class is too small
    to stratify.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValidationError(f"ratios must be three positive fractions: {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1: {ratios}")
    if len(records) < 3:
        raise ValidationError("need at least 3 records to split")

    counts = _largest_remainder(len(records), tuple(ratios))
    indices = list(range(len(records)))
    labels = [r.label.value for r in records]

    train_idx, rest_idx = _take(indices, labels, counts[0], seed)
    rest_labels = [labels[i] for i in rest_idx]
    dev_idx, test_idx = _take(rest_idx, rest_labels, counts[1], seed)

    pick = lambda idx: [records[i] for i in sorted(idx)]
    return pick(train_idx), pick(dev_idx), pick(test_idx)
