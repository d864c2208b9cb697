"""Corpus ingestion, tokenization, and JSONL serialization.

Readers stream records line by line and apply the malformed-record policy:
skip with a warning by default, abort in strict mode. Writers emit
byte-deterministic JSONL so identical inputs always produce identical files.
"""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass

log = logging.getLogger(__name__)

DEFAULT_PLACEHOLDER = "@placeholder"

_CHUNK = re.compile(r"\S+")


class RecordError(ValueError):
    """A malformed input record, tagged with its 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Token:
    """One tokenizer output unit; slicing the source at the offsets yields the surface."""

    surface: str
    char_start: int
    char_end: int

    def __post_init__(self) -> None:
        if not (0 <= self.char_start < self.char_end):
            raise ValueError(f"bad token offsets [{self.char_start}, {self.char_end})")
        if len(self.surface) != self.char_end - self.char_start:
            raise ValueError(
                f"surface length {len(self.surface)} does not match offsets "
                f"[{self.char_start}, {self.char_end})"
            )


@dataclass(frozen=True)
class PretrainingPair:
    """One (document, summary) element of the unlabelled pre-training corpus."""

    id: str
    document: str
    summary: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("id must be non-empty")
        if not self.document.strip():
            raise ValueError("document must be non-empty")
        if not self.summary.strip():
            raise ValueError("summary must be non-empty")


@dataclass(frozen=True)
class McqSample:
    """A multiple-choice cloze sample: context, placeholder-bearing question,
    k options, and the gold option's index as the label."""

    id: str
    context: str
    question: str
    options: tuple[str, ...]
    label: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))
        if not self.id:
            raise ValueError("id must be non-empty")
        if len(self.options) < 2:
            raise ValueError("a sample needs at least 2 options")
        if not (0 <= self.label < len(self.options)):
            raise ValueError(f"label {self.label} out of range for {len(self.options)} options")
        if len({o.lower() for o in self.options}) != len(self.options):
            raise ValueError("options must be pairwise distinct (case-insensitive)")

    @property
    def gold(self) -> str:
        return self.options[self.label]

    def validate_placeholder(self, placeholder: str = DEFAULT_PLACEHOLDER) -> None:
        n = self.question.count(placeholder)
        if n != 1:
            raise ValueError(f"question must contain {placeholder!r} exactly once, found {n}")


@dataclass(frozen=True)
class CorpusStats:
    """Sample counts entering the pipeline and surviving each stage."""

    input_count: int
    post_gae_count: int
    post_pog_count: int

    def __post_init__(self) -> None:
        if not (0 <= self.post_pog_count <= self.post_gae_count <= self.input_count):
            raise ValueError(
                "stage counts must satisfy post_pog <= post_gae <= input, got "
                f"{self.post_pog_count}/{self.post_gae_count}/{self.input_count}"
            )


def tokenize(text: str) -> list[Token]:
    """Split text into offset-faithful word and punctuation tokens.

    Whitespace separates chunks; leading and trailing non-alphanumeric
    characters of each chunk are peeled off as single-character tokens, so
    interior hyphens and apostrophes stay inside their word. Deterministic
    and total: empty input yields an empty list.
    """
    tokens: list[Token] = []
    for m in _CHUNK.finditer(text):
        chunk = m.group()
        base = m.start()
        i, j = 0, len(chunk)
        while i < j and not chunk[i].isalnum():
            tokens.append(Token(chunk[i], base + i, base + i + 1))
            i += 1
        trailing: list[Token] = []
        while j > i and not chunk[j - 1].isalnum():
            trailing.append(Token(chunk[j - 1], base + j - 1, base + j))
            j -= 1
        if i < j:
            tokens.append(Token(chunk[i:j], base + i, base + j))
        tokens.extend(reversed(trailing))
    return tokens


def _report(err: RecordError, strict: bool, on_skip: Callable[[RecordError], None] | None) -> None:
    if strict:
        raise err
    log.warning("skipping record: %s", err)
    if on_skip is not None:
        on_skip(err)


def _iter_json_lines(
    path: str,
    strict: bool,
    on_skip: Callable[[RecordError], None] | None,
) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                _report(RecordError(line_no, f"invalid JSON: {exc}"), strict, on_skip)
                continue
            if not isinstance(obj, dict):
                _report(RecordError(line_no, "record is not a JSON object"), strict, on_skip)
                continue
            yield line_no, obj


def _get_text(obj: dict, key: str, line_no: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise RecordError(line_no, f"missing or non-string {key!r} field")
    return value


def _get_id(obj: dict, line_no: int, prefix: str) -> str:
    value = obj.get("id")
    if value is None:
        return f"{prefix}{line_no:06d}"
    if isinstance(value, (str, int)):
        return str(value)
    raise RecordError(line_no, "id must be a string or integer")


def read_pretraining_corpus(
    path: str,
    *,
    strict: bool = False,
    on_skip: Callable[[RecordError], None] | None = None,
) -> Iterator[PretrainingPair]:
    """Stream (document, summary) pairs from JSONL.

    Schema: ``{"id": str?, "document": str, "summary": str}``. Records
    without an id get a sequential one derived from their line number.
    Malformed records raise in strict mode and are otherwise skipped with a
    warning (``on_skip`` sees each skipped error, for counting).
    """
    seen: set[str] = set()
    for line_no, obj in _iter_json_lines(path, strict, on_skip):
        try:
            pair_id = _get_id(obj, line_no, "p")
            if pair_id in seen:
                raise RecordError(line_no, f"duplicate id {pair_id!r}")
            document = _get_text(obj, "document", line_no)
            summary = _get_text(obj, "summary", line_no)
            try:
                pair = PretrainingPair(pair_id, document, summary)
            except ValueError as exc:
                raise RecordError(line_no, str(exc)) from exc
        except RecordError as err:
            _report(err, strict, on_skip)
            continue
        seen.add(pair_id)
        yield pair


def _parse_mcq(obj: dict, line_no: int, placeholder: str) -> McqSample:
    sample_id = _get_id(obj, line_no, "q")
    context = _get_text(obj, "article", line_no)
    question = _get_text(obj, "question", line_no)
    options: list[str] = []
    while f"option_{len(options)}" in obj:
        value = obj[f"option_{len(options)}"]
        if not isinstance(value, str):
            raise RecordError(line_no, f"option_{len(options)} is not a string")
        options.append(value)
    label = obj.get("label")
    if isinstance(label, bool) or not isinstance(label, int):
        raise RecordError(line_no, "missing or non-integer 'label' field")
    try:
        sample = McqSample(sample_id, context, question, tuple(options), label)
        sample.validate_placeholder(placeholder)
    except ValueError as exc:
        raise RecordError(line_no, str(exc)) from exc
    return sample


def read_downstream_dataset(
    path: str,
    *,
    placeholder: str = DEFAULT_PLACEHOLDER,
    strict: bool = False,
    on_skip: Callable[[RecordError], None] | None = None,
) -> Iterator[McqSample]:
    """Stream validated MCQ samples from JSONL.

    Schema: ``{"id": str, "article": str, "question": str,
    "option_0".."option_{k-1}": str, "label": int}``; the question must
    contain the placeholder exactly once and the label must index an option.
    """
    for line_no, obj in _iter_json_lines(path, strict, on_skip):
        try:
            yield _parse_mcq(obj, line_no, placeholder)
        except RecordError as err:
            _report(err, strict, on_skip)
            continue


def mcq_to_record(sample: McqSample) -> dict:
    rec: dict = {"id": sample.id, "article": sample.context, "question": sample.question}
    for i, opt in enumerate(sample.options):
        rec[f"option_{i}"] = opt
    rec["label"] = sample.label
    return rec


def write_mcq_dataset(samples: Iterable[McqSample], path: str) -> int:
    """Write samples as JSONL; returns the number written.

    Output is byte-deterministic given the same samples in the same order,
    and round-trips through :func:`read_downstream_dataset`.
    """
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in samples:
            fh.write(json.dumps(mcq_to_record(sample), ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def write_pretraining_corpus(pairs: Iterable[PretrainingPair], path: str) -> int:
    """Write (document, summary) pairs as JSONL; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            rec = {"id": pair.id, "document": pair.document, "summary": pair.summary}
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count
