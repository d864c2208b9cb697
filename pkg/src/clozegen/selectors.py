"""Baseline answer-selection strategies.

Alternatives to the learned tagger that share its output type: a selector
examines a (document, summary) pair and proposes one answer span from the
summary, or none (a counted drop). Includes a POS-distribution selector
that imitates the downstream answers' part-of-speech profile and a
scored-lexicon selector that picks the highest-scoring word present.
"""

from __future__ import annotations

import math
import random
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

from .corpus import McqSample, PretrainingPair, Token, tokenize
from .tagger import Span
from .wordlists import FUNCTION_WORDS

POS_TAGS: tuple[str, ...] = ("NOUN", "VERB", "ADJ", "ADV", "FUNC", "NUM", "PUNCT", "OTHER")

PosTagger = Callable[[Sequence[Token]], list[str]]

_ADJ_SUFFIXES = ("ous", "ful", "ive", "able", "ible", "ish", "al", "ic")
_NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ism", "ist", "ship")


@dataclass(frozen=True)
class PosDistribution:
    """A probability histogram over coarse POS tags."""

    histogram: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.histogram:
            raise ValueError("empty distribution")
        total = 0.0
        for tag, p in self.histogram.items():
            if p < 0.0 or not math.isfinite(p):
                raise ValueError(f"bad probability {p!r} for tag {tag!r}")
            total += p
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    def sample(self, rng: random.Random) -> str:
        """Draw one tag; iteration order is sorted for determinism."""
        r = rng.random()
        acc = 0.0
        tags = sorted(self.histogram)
        for tag in tags:
            acc += self.histogram[tag]
            if r < acc:
                return tag
        return tags[-1]


@dataclass(frozen=True)
class ScoredLexicon:
    """Lowercased word scores plus the qualification threshold."""

    entries: dict[str, float] = field(default_factory=dict)
    threshold: float = 0.0

    def __post_init__(self) -> None:
        normalized: dict[str, float] = {}
        for word, score in self.entries.items():
            if not math.isfinite(score):
                raise ValueError(f"non-finite score for {word!r}")
            low = word.lower()
            if low not in normalized or score > normalized[low]:
                normalized[low] = score
        object.__setattr__(self, "entries", normalized)
        if not math.isfinite(self.threshold):
            raise ValueError("non-finite threshold")


def builtin_pos_tagger(tokens: Sequence[Token]) -> list[str]:
    """Rule-based coarse POS tags: closed-class lookup plus suffix rules.

    Deterministic and total; any callable with this signature can replace
    it wherever a POS tagger is accepted.
    """
    tags: list[str] = []
    for token in tokens:
        w = token.surface
        lw = w.lower()
        if not any(c.isalnum() for c in w):
            tags.append("PUNCT")
        elif not any(c.isalpha() for c in w):
            tags.append("NUM")
        elif lw in FUNCTION_WORDS:
            tags.append("FUNC")
        elif lw.endswith("ly") and len(lw) > 3:
            tags.append("ADV")
        elif (lw.endswith("ing") or lw.endswith("ed")) and len(lw) > 4:
            tags.append("VERB")
        elif lw.endswith(_ADJ_SUFFIXES) and len(lw) > 4:
            tags.append("ADJ")
        elif lw.endswith(_NOUN_SUFFIXES) and len(lw) > 4:
            tags.append("NOUN")
        else:
            tags.append("NOUN")
    return tags


def lexicon_pos_tagger(
    lexicon: dict[str, str], fallback: PosTagger = builtin_pos_tagger
) -> PosTagger:
    """Wrap a word-to-tag lexicon as a POS tagger with rule fallback."""
    lowered = {w.lower(): t for w, t in lexicon.items()}

    def tag(tokens: Sequence[Token]) -> list[str]:
        out = fallback(tokens)
        for i, token in enumerate(tokens):
            hit = lowered.get(token.surface.lower())
            if hit is not None:
                out[i] = hit
        return out

    return tag


def fit_pos_distribution(
    downstream: Sequence[McqSample], pos_tagger: PosTagger = builtin_pos_tagger
) -> PosDistribution:
    """POS histogram of the gold options' first tokens, normalized."""
    if not downstream:
        raise ValueError("no downstream samples")
    counts: dict[str, int] = {}
    for sample in downstream:
        tokens = tokenize(sample.gold)
        if not tokens:
            continue
        tag = pos_tagger(tokens)[0]
        counts[tag] = counts.get(tag, 0) + 1
    if not counts:
        raise ValueError("no taggable gold options")
    total = sum(counts.values())
    return PosDistribution({tag: n / total for tag, n in counts.items()})


def _token_span(index: int, token: Token) -> Span:
    return Span(
        token_start=index,
        token_end=index + 1,
        char_start=token.char_start,
        char_end=token.char_end,
        text=token.surface,
    )


def select_by_pos(
    dist: PosDistribution,
    pair: PretrainingPair,
    pos_tagger: PosTagger = builtin_pos_tagger,
    rng: random.Random | None = None,
) -> Span | None:
    """Sample a POS tag from the distribution, then pick a summary token
    of that POS uniformly; None when the summary has no such token."""
    if rng is None:
        rng = random.Random(0)
    tokens = tokenize(pair.summary)
    if not tokens:
        return None
    wanted = dist.sample(rng)
    tags = pos_tagger(tokens)
    matching = [i for i, tag in enumerate(tags) if tag == wanted]
    if not matching:
        return None
    index = matching[rng.randrange(len(matching))]
    return _token_span(index, tokens[index])


def select_by_lexicon(lex: ScoredLexicon, pair: PretrainingPair) -> Span | None:
    """The summary token with the highest lexicon score at or above the
    threshold; leftmost wins ties; None when nothing qualifies."""
    best: Span | None = None
    best_score = -math.inf
    for i, token in enumerate(tokenize(pair.summary)):
        score = lex.entries.get(token.surface.lower())
        if score is None or score < lex.threshold:
            continue
        if score > best_score:
            best = _token_span(i, token)
            best_score = score
    return best


def read_scored_lexicon(path: str, threshold: float = 0.0) -> ScoredLexicon:
    """Read a "word<TAB>score" file into a ScoredLexicon."""
    entries: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            word, sep, score = line.partition("\t")
            if not sep or not word:
                raise ValueError(f"{path}:{line_no}: expected 'word<TAB>score'")
            try:
                entries[word] = float(score)
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: bad score {score!r}") from exc
    return ScoredLexicon(entries=entries, threshold=threshold)


def read_pos_lexicon(path: str) -> dict[str, str]:
    """Read a "word<TAB>tag" file into a word-to-POS mapping."""
    lexicon: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            word, sep, tag = line.partition("\t")
            if not sep or not word or not tag:
                raise ValueError(f"{path}:{line_no}: expected 'word<TAB>tag'")
            lexicon[word.lower()] = tag
    return lexicon
