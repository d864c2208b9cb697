"""Pseudo-option generation.

Queries a fill-mask predictor for each cloze question, filters candidates
that are incomplete word pieces or too similar to the gold answer, and
samples the distractor set. Two predictors are provided: an offline
n-gram scorer fitted on the corpus documents, and a client for a remote
fill-mask HTTP service.
"""

from __future__ import annotations

import json
import logging
import math
import random
import time
from collections import Counter
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import Protocol

import requests

from .corpus import RecordError, tokenize
from .gae import DEFAULT_MASK, ClozeCandidate, candidate_to_record
from .wordlists import FUNCTION_WORDS

log = logging.getLogger(__name__)

FILL_MASK_PATH = "/v1/fill-mask"
HEALTH_PATH = "/v1/health"

_UNIGRAM_WEIGHT = 0.1


class PredictorError(RuntimeError):
    """A predictor failed to produce candidates for a cloze question."""


@dataclass(frozen=True)
class MaskPrediction:
    """One candidate fill for the masked position."""

    token: str
    score: float

    def __post_init__(self) -> None:
        if not self.token:
            raise ValueError("empty prediction token")
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score {self.score!r}")


class FillMaskPredictor(Protocol):
    def fill_mask(self, text: str, mask_token: str, top_n: int) -> list[MaskPrediction]:
        """Candidates for the single mask occurrence in text."""


@dataclass(frozen=True)
class PredictorSpec:
    """Which predictor to use and how to query it."""

    kind: str = "builtin"
    endpoint: str | None = None
    top_n: int = 10
    mask_token: str = DEFAULT_MASK

    def __post_init__(self) -> None:
        if self.kind not in ("builtin", "remote"):
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote predictor needs an endpoint")


def _context_words(text: str) -> list[str]:
    return [
        t.surface.lower() for t in tokenize(text) if t.surface[0].isalnum()
    ]


def _eligible(word: str) -> bool:
    return word.isalpha() and word not in FUNCTION_WORDS


class NgramPredictor:
    """Offline fill-mask scorer from corpus bigram and unigram counts.

    score(w) = log(1 + count(prev, w)) + log(1 + count(w, next))
             + 0.1 * log(1 + count(w)),
    with prev/next the words adjacent to the mask; ties break
    lexicographically. Function words and non-alphabetic tokens are never
    candidates. With unseen context the ranking reduces to unigram
    frequency. Immutable once built, safe for concurrent use.
    """

    def __init__(
        self,
        unigram: Counter[str],
        following: dict[str, Counter[str]],
        preceding: dict[str, Counter[str]],
    ) -> None:
        self._unigram = unigram
        self._following = following
        self._preceding = preceding
        # all candidate words ranked by (-count, word): the order non-evidence
        # words take in any query, since their score is monotone in count
        self._ranked = sorted(
            (w for w in unigram if _eligible(w)),
            key=lambda w: (-unigram[w], w),
        )

    @classmethod
    def from_documents(cls, texts: Iterable[str]) -> "NgramPredictor":
        unigram: Counter[str] = Counter()
        following: dict[str, Counter[str]] = {}
        preceding: dict[str, Counter[str]] = {}
        for text in texts:
            words = _context_words(text)
            unigram.update(words)
            for a, b in zip(words, words[1:]):
                if a not in following:
                    following[a] = Counter()
                following[a][b] += 1
                if b not in preceding:
                    preceding[b] = Counter()
                preceding[b][a] += 1
        return cls(unigram, following, preceding)

    def _score(self, word: str, after_prev: Counter[str], before_next: Counter[str]) -> float:
        return (
            math.log1p(after_prev.get(word, 0))
            + math.log1p(before_next.get(word, 0))
            + _UNIGRAM_WEIGHT * math.log1p(self._unigram.get(word, 0))
        )

    def fill_mask(self, text: str, mask_token: str, top_n: int) -> list[MaskPrediction]:
        if top_n < 1:
            raise ValueError("top_n must be >= 1")
        if text.count(mask_token) != 1:
            raise PredictorError(
                f"expected exactly one {mask_token!r} in text, found {text.count(mask_token)}"
            )
        before, after = text.split(mask_token)
        before_words = _context_words(before)
        after_words = _context_words(after)
        prev = before_words[-1] if before_words else None
        nxt = after_words[0] if after_words else None
        after_prev = self._following.get(prev, Counter()) if prev else Counter()
        before_next = self._preceding.get(nxt, Counter()) if nxt else Counter()
        evidence = {w for w in after_prev if _eligible(w)}
        evidence.update(w for w in before_next if _eligible(w))
        # non-evidence words share the pure-unigram score, so only the
        # first top_n of them in ranked order can reach the final cut
        pool = list(evidence)
        budget = top_n
        for w in self._ranked:
            if budget == 0:
                break
            if w not in evidence:
                pool.append(w)
                budget -= 1
        scored = sorted(
            ((self._score(w, after_prev, before_next), w) for w in pool),
            key=lambda pair: (-pair[0], pair[1]),
        )
        return [MaskPrediction(token=w, score=s) for s, w in scored[:top_n]]


class RemotePredictor:
    """HTTP client for a fill-mask service.

    POSTs {"text", "mask_token", "top_n"} to /v1/fill-mask and passes the
    returned candidates through verbatim. Transport failures, non-200
    statuses, and malformed bodies are retried with exponential backoff;
    once attempts are exhausted a PredictorError is raised, which the
    pipeline records as a per-candidate drop.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        timeout: float = 30.0,
        attempts: int = 3,
        backoff: float = 0.5,
    ) -> None:
        if attempts < 1:
            raise ValueError("attempts must be >= 1")
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.attempts = attempts
        self.backoff = backoff

    def _parse(self, payload: object) -> list[MaskPrediction]:
        if not isinstance(payload, dict) or not isinstance(payload.get("candidates"), list):
            raise PredictorError("response lacks a 'candidates' array")
        out: list[MaskPrediction] = []
        for item in payload["candidates"]:
            if not isinstance(item, dict):
                raise PredictorError("candidate entry is not an object")
            token = item.get("token")
            score = item.get("score")
            if not isinstance(token, str) or isinstance(score, bool) or not isinstance(score, (int, float)):
                raise PredictorError("candidate entry needs string 'token' and numeric 'score'")
            try:
                out.append(MaskPrediction(token=token, score=float(score)))
            except ValueError as exc:
                raise PredictorError(str(exc)) from exc
        return out

    def fill_mask(self, text: str, mask_token: str, top_n: int) -> list[MaskPrediction]:
        payload = {"text": text, "mask_token": mask_token, "top_n": top_n}
        last: Exception | None = None
        for attempt in range(1, self.attempts + 1):
            try:
                resp = requests.post(
                    self.endpoint + FILL_MASK_PATH, json=payload, timeout=self.timeout
                )
                if resp.status_code != 200:
                    raise PredictorError(f"fill-mask returned HTTP {resp.status_code}")
                return self._parse(resp.json())
            except (requests.RequestException, ValueError, PredictorError) as exc:
                last = exc
                if attempt < self.attempts:
                    time.sleep(self.backoff * 2 ** (attempt - 1))
        raise PredictorError(f"fill-mask failed after {self.attempts} attempts: {last}")

    def health(self) -> dict:
        """One-shot health probe; raises PredictorError when unhealthy."""
        try:
            resp = requests.get(self.endpoint + HEALTH_PATH, timeout=self.timeout)
        except requests.RequestException as exc:
            raise PredictorError(f"health check failed: {exc}") from exc
        if resp.status_code != 200:
            raise PredictorError(f"health check returned HTTP {resp.status_code}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise PredictorError("health check returned malformed JSON") from exc
        if not isinstance(body, dict) or body.get("status") != "ok":
            raise PredictorError(f"service unhealthy: {body!r}")
        return body


def make_predictor(
    spec: PredictorSpec, corpus_texts: Iterable[str] | None = None
) -> FillMaskPredictor:
    """Instantiate the predictor a spec describes; builtin predictors are
    fitted on the given corpus documents."""
    if spec.kind == "builtin":
        return NgramPredictor.from_documents(corpus_texts or ())
    return RemotePredictor(spec.endpoint or "")


def predict_mask(
    predictor: FillMaskPredictor,
    candidate: ClozeCandidate,
    mask_token: str = DEFAULT_MASK,
    top_n: int = 10,
) -> list[MaskPrediction]:
    """Query the predictor for a candidate's masked position."""
    candidate.validate_mask(mask_token)
    return predictor.fill_mask(candidate.question, mask_token, top_n)


def is_incomplete(token: str, continuation_marker: str = "##") -> bool:
    """True for sub-word continuations and tokens with no alphabetic char."""
    if continuation_marker and token.startswith(continuation_marker):
        return True
    return not any(c.isalpha() for c in token)


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


_VOWELS = "aeiou"


def stem(word: str) -> str:
    """Fixed suffix-stripping stemmer over lowercase words.

    Strips one of "ing", "es", "ed", "ly", "s" (longest first): "es" only
    after sibilant endings (s, x, z, ch, sh), and a doubled final consonant
    left by "ing"/"ed" is undone except for l, s, z. Stems shorter than 2
    characters are never produced.
    """
    for suffix in ("ing", "es", "ed", "ly", "s"):
        if not word.endswith(suffix) or len(word) - len(suffix) < 2:
            continue
        base = word[: -len(suffix)]
        if suffix == "es" and not (base[-1] in "sxz" or base.endswith(("ch", "sh"))):
            continue
        if suffix in ("ing", "ed") and (
            len(base) >= 3
            and base[-1] == base[-2]
            and base[-1].isalpha()
            and base[-1] not in _VOWELS
            and base[-1] not in "lsz"
        ):
            base = base[:-1]
        return base
    return word


def too_similar(candidate: str, gold: str, threshold: float = 0.8) -> bool:
    """True when the candidate is a near-duplicate of the gold answer:
    case-insensitive equality, equal stems, or normalized Levenshtein
    similarity (1 - distance/max length) at or above the threshold."""
    a, b = candidate.lower(), gold.lower()
    if a == b:
        return True
    if stem(a) == stem(b):
        return True
    longest = max(len(a), len(b))
    if longest == 0:
        return True
    return 1.0 - levenshtein(a, b) / longest >= threshold


def sample_distractors(
    predictions: Sequence[MaskPrediction],
    gold: str,
    needed: int,
    rng: random.Random,
    *,
    continuation_marker: str = "##",
    similarity_threshold: float = 0.8,
) -> list[str] | None:
    """Filter predictions and sample the distractor set.

    Drops incomplete and too-similar candidates, deduplicates
    case-insensitively keeping the highest-scored surface, then samples
    `needed` distractors uniformly without replacement. None signals the
    candidate must be dropped for running short.
    """
    if needed < 1:
        raise ValueError("needed must be >= 1")
    kept: dict[str, MaskPrediction] = {}
    order: list[str] = []
    for pred in predictions:
        if is_incomplete(pred.token, continuation_marker):
            continue
        if too_similar(pred.token, gold, similarity_threshold):
            continue
        low = pred.token.lower()
        if low not in kept:
            kept[low] = pred
            order.append(low)
        elif pred.score > kept[low].score:
            kept[low] = pred
    pool = [kept[low].token for low in order]
    if len(pool) < needed:
        return None
    return rng.sample(pool, needed)


def write_generated(
    records: Iterable[tuple[ClozeCandidate, Sequence[str]]], path: str
) -> int:
    """Write candidates with their sampled distractors as JSONL."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for candidate, distractors in records:
            rec = candidate_to_record(candidate)
            rec["distractors"] = list(distractors)
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def read_generated(
    path: str,
    *,
    strict: bool = False,
    on_skip: Callable[[RecordError], None] | None = None,
) -> Iterator[tuple[ClozeCandidate, list[str]]]:
    """Stream candidate/distractor records written by write_generated."""
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
                distractors = obj.get("distractors")
                if not isinstance(distractors, list) or not all(
                    isinstance(d, str) for d in distractors
                ):
                    raise RecordError(line_no, "missing or malformed 'distractors' array")
                try:
                    candidate = ClozeCandidate(
                        id=fields["id"],
                        context=fields["article"],
                        question=fields["question"],
                        answer=fields["answer"],
                    )
                except ValueError as exc:
                    raise RecordError(line_no, str(exc)) from exc
                yield candidate, list(distractors)
            except RecordError as err:
                if strict:
                    raise
                log.warning("skipping record: %s", err)
                if on_skip is not None:
                    on_skip(err)
