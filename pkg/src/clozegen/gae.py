"""Gold answer extraction and cloze construction.

Turns labelled MCQ data into tagger training material, runs the tagger
over corpus summaries, and masks the chosen span to form cloze questions.
Everything works on character offsets into the original summary, so
substituting the answer back at the mask reproduces the summary byte for
byte.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass

from .corpus import DEFAULT_PLACEHOLDER, McqSample, PretrainingPair, RecordError, tokenize
from .tagger import Span, TagSequence, TaggerModel, extract_spans, predict

log = logging.getLogger(__name__)

DEFAULT_MASK = "[MASK]"


@dataclass(frozen=True)
class ClozeCandidate:
    """A masked cloze question awaiting distractors.

    The question holds the mask token where the answer was; answer_span
    gives the answer's character offsets in the original summary (None for
    candidates reloaded from disk).
    """

    id: str
    context: str
    question: str
    answer: str
    answer_span: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise ValueError("question must be non-empty")
        if not self.answer:
            raise ValueError("answer must be non-empty")

    def validate_mask(self, mask_token: str = DEFAULT_MASK) -> None:
        n = self.question.count(mask_token)
        if n != 1:
            raise ValueError(f"question must contain {mask_token!r} exactly once, found {n}")

    def unmask(self, mask_token: str = DEFAULT_MASK) -> str:
        """The question with the mask token substituted by the answer."""
        pos = self.question.index(mask_token)
        return (
            self.question[:pos]
            + self.answer
            + self.question[pos + len(mask_token):]
        )


def repurpose_downstream(
    sample: McqSample, placeholder: str = DEFAULT_PLACEHOLDER
) -> TagSequence:
    """Convert one labelled MCQ sample into a tagging instance.

    The gold option is substituted at the placeholder, the sentence is
    tokenized, and the tokens covering the gold option are tagged B-ANS
    then I-ANS; the result always contains exactly one tagged span whose
    tokens equal the tokenization of the gold option. Raises ValueError
    when the placeholder is absent/duplicated or the option does not align
    with token boundaries.
    """
    sample.validate_placeholder(placeholder)
    gold = sample.gold
    pos = sample.question.index(placeholder)
    filled = sample.question[:pos] + gold + sample.question[pos + len(placeholder):]
    tokens = tokenize(filled)
    lo, hi = pos, pos + len(gold)
    inside = [
        i for i, t in enumerate(tokens) if t.char_start >= lo and t.char_end <= hi
    ]
    if not inside:
        raise ValueError(f"gold option {gold!r} does not cover any token")
    if [tokens[i].surface for i in inside] != [t.surface for t in tokenize(gold)]:
        raise ValueError(f"gold option {gold!r} does not align with token boundaries")
    tags = ["O"] * len(tokens)
    tags[inside[0]] = "B-ANS"
    for i in inside[1:]:
        tags[i] = "I-ANS"
    return TagSequence(tuple(t.surface for t in tokens), tuple(tags))


def repurpose_all(
    samples: Iterable[McqSample],
    placeholder: str = DEFAULT_PLACEHOLDER,
    *,
    strict: bool = False,
    on_skip: Callable[[RecordError], None] | None = None,
) -> Iterator[TagSequence]:
    """Repurpose a stream of samples, applying the malformed-record policy."""
    for n, sample in enumerate(samples, start=1):
        try:
            yield repurpose_downstream(sample, placeholder)
        except ValueError as exc:
            err = RecordError(n, f"sample {sample.id!r}: {exc}")
            if strict:
                raise err from exc
            log.warning("skipping sample: %s", err)
            if on_skip is not None:
                on_skip(err)


def extract_gold(model: TaggerModel, pair: PretrainingPair) -> tuple[Span, ...]:
    """Tokenize the summary, predict tags, and return all extracted spans.

    Filtering to exactly one answer is a separate step; an untrained
    (all-zero) model yields no spans.
    """
    tokens = tokenize(pair.summary)
    if not tokens:
        return ()
    tags = predict(model, tokens)
    return extract_spans(tags, tokens, text=pair.summary)


def filter_single_answer(spans: Sequence[Span]) -> Span | None:
    """The lone span when exactly one was extracted, else None (a drop)."""
    if len(spans) == 1:
        return spans[0]
    return None


def make_cloze(pair: PretrainingPair, span: Span, mask_token: str = DEFAULT_MASK) -> ClozeCandidate:
    """Mask the span in the summary to form a cloze candidate.

    The answer is the exact summary slice at the span's character offsets,
    so putting it back at the mask reproduces the summary byte for byte.
    """
    cs, ce = span.char_start, span.char_end
    if not (0 <= cs < ce <= len(pair.summary)):
        raise ValueError(f"span [{cs}, {ce}) out of bounds for summary of length {len(pair.summary)}")
    answer = pair.summary[cs:ce]
    question = pair.summary[:cs] + mask_token + pair.summary[ce:]
    return ClozeCandidate(
        id=pair.id,
        context=pair.document,
        question=question,
        answer=answer,
        answer_span=(cs, ce),
    )


def candidate_to_record(candidate: ClozeCandidate) -> dict:
    return {
        "id": candidate.id,
        "article": candidate.context,
        "question": candidate.question,
        "answer": candidate.answer,
    }


def write_candidates(candidates: Iterable[ClozeCandidate], path: str) -> int:
    """Write cloze candidates as JSONL; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for candidate in candidates:
            fh.write(json.dumps(candidate_to_record(candidate), ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def read_candidates(
    path: str,
    *,
    strict: bool = False,
    on_skip: Callable[[RecordError], None] | None = None,
) -> Iterator[ClozeCandidate]:
    """Stream cloze candidates from JSONL ({"id","article","question","answer"})."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise RecordError(line_no, "record is not a JSON object")
                fields = {}
                for key in ("id", "article", "question", "answer"):
                    value = obj.get(key)
                    if not isinstance(value, str):
                        raise RecordError(line_no, f"missing or non-string {key!r} field")
                    fields[key] = value
                try:
                    yield ClozeCandidate(
                        id=fields["id"],
                        context=fields["article"],
                        question=fields["question"],
                        answer=fields["answer"],
                    )
                except ValueError as exc:
                    raise RecordError(line_no, str(exc)) from exc
            except RecordError as err:
                if strict:
                    raise
                log.warning("skipping record: %s", err)
                if on_skip is not None:
                    on_skip(err)
