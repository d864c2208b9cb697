"""Answer-span sequence tagger.

A BIO tagger over summary tokens: B-ANS opens an answer span, I-ANS
continues it, O is everything else. The model is a linear structured
perceptron with averaged weights, decoded exactly with Viterbi. Ties are
broken toward the lexicographically smallest tag sequence under the
canonical tag order, which puts O first, so an untrained all-zero model
predicts all O and extracts nothing.
"""

from __future__ import annotations

import json
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .corpus import Token

# canonical order; index 0 must stay O so zero-weight models fail closed
TAGS: tuple[str, ...] = ("O", "B-ANS", "I-ANS")

_START = "<s>"

MODEL_HEADER = "clozegen-tagger v1"


def _surfaces(tokens: Sequence[Token | str]) -> list[str]:
    return [t.surface if isinstance(t, Token) else t for t in tokens]


@dataclass(frozen=True)
class TagSequence:
    """One tagging instance: parallel token and tag tuples.

    Training data must be well-formed BIO: I-ANS may only continue a span,
    never open one.
    """

    tokens: tuple[str, ...]
    tags: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(_surfaces(self.tokens)))
        object.__setattr__(self, "tags", tuple(self.tags))
        if not self.tokens:
            raise ValueError("instance must have at least one token")
        if len(self.tokens) != len(self.tags):
            raise ValueError(f"{len(self.tokens)} tokens but {len(self.tags)} tags")
        prev = "O"
        for i, tag in enumerate(self.tags):
            if tag not in TAGS:
                raise ValueError(f"unknown tag {tag!r}")
            if tag == "I-ANS" and prev == "O":
                raise ValueError(f"I-ANS at position {i} does not continue a span")
            prev = tag


@dataclass(frozen=True)
class Span:
    """An answer span: token range (end exclusive) plus character offsets."""

    token_start: int
    token_end: int
    char_start: int
    char_end: int
    text: str

    def __post_init__(self) -> None:
        if not (0 <= self.token_start < self.token_end):
            raise ValueError(f"bad token range [{self.token_start}, {self.token_end})")
        if not (0 <= self.char_start < self.char_end):
            raise ValueError(f"bad char range [{self.char_start}, {self.char_end})")


def _shape(word: str) -> str:
    out = []
    for ch in word:
        if ch.isupper():
            out.append("X")
        elif ch.islower():
            out.append("x")
        elif ch.isdigit():
            out.append("d")
        else:
            out.append("_")
    return "".join(out)


def _collapse(shape: str) -> str:
    out = []
    for code in shape:
        if not out or out[-1] != code:
            out.append(code)
    return "".join(out)


def featurize(tokens: Sequence[Token | str], position: int) -> tuple[str, ...]:
    """Emission features for one position; deduplicated, order-stable.

    Covers the word identity, its character shape (exact and run-collapsed),
    prefixes and suffixes up to length 3, lowercased neighbors at offsets
    -2..+2 with boundary markers, and a first/last/interior position bucket.
    """
    words = _surfaces(tokens)
    n = len(words)
    if not (0 <= position < n):
        raise IndexError(f"position {position} out of range for {n} tokens")
    w = words[position]
    lw = w.lower()
    shape = _shape(w)
    # the collapsed variant generalizes across word lengths
    feats = ["bias", "w=" + lw, "shape=" + shape, "shape2=" + _collapse(shape)]
    for length in (1, 2, 3):
        feats.append(f"pre{length}=" + lw[:length])
        feats.append(f"suf{length}=" + lw[-length:])
    for off in (-2, -1, 1, 2):
        j = position + off
        if j < 0:
            val = _START
        elif j >= n:
            val = "</s>"
        else:
            val = words[j].lower()
        feats.append(f"ctx{off:+d}=" + val)
    if position == 0:
        bucket = "first"
    elif position == n - 1:
        bucket = "last"
    else:
        bucket = "interior"
    feats.append("pos=" + bucket)
    return tuple(dict.fromkeys(feats))


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def _unescape(text: str) -> str:
    out: list[str] = []
    it = iter(text)
    for ch in it:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(it, "")
        if nxt == "\\":
            out.append("\\")
        elif nxt == "t":
            out.append("\t")
        elif nxt == "n":
            out.append("\n")
        elif nxt == "r":
            out.append("\r")
        else:
            raise ValueError(f"bad escape sequence \\{nxt}")
    return "".join(out)


@dataclass
class TaggerModel:
    """Sparse linear weights: emissions keyed (tag, feature), transitions
    keyed (previous tag, tag) with "<s>" standing in before the first token."""

    emissions: dict[tuple[str, str], float] = field(default_factory=dict)
    transitions: dict[tuple[str, str], float] = field(default_factory=dict)
    epochs: int = 0
    seed: int = 0

    def emission_score(self, feats: Sequence[str], tag: str) -> float:
        w = self.emissions
        total = 0.0
        for feat in feats:
            total += w.get((tag, feat), 0.0)
        return total

    def transition_score(self, prev: str, tag: str) -> float:
        return self.transitions.get((prev, tag), 0.0)

    def save(self, path: str) -> None:
        """Write a versioned, sorted, line-oriented text file; byte-deterministic."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(MODEL_HEADER + "\n")
            fh.write(f"meta\tepochs\t{self.epochs}\n")
            fh.write(f"meta\tseed\t{self.seed}\n")
            for tag, feat in sorted(self.emissions):
                value = self.emissions[(tag, feat)]
                if value != 0.0:
                    fh.write(f"E\t{tag}\t{_escape(feat)}\t{value!r}\n")
            for prev, tag in sorted(self.transitions):
                value = self.transitions[(prev, tag)]
                if value != 0.0:
                    fh.write(f"T\t{prev}\t{tag}\t{value!r}\n")

    @classmethod
    def load(cls, path: str) -> "TaggerModel":
        emissions: dict[tuple[str, str], float] = {}
        transitions: dict[tuple[str, str], float] = {}
        meta = {"epochs": 0, "seed": 0}
        with open(path, encoding="utf-8", newline="\n") as fh:
            header = fh.readline().rstrip("\n")
            if header != MODEL_HEADER:
                raise ValueError(f"unrecognized model header {header!r}")
            for line_no, line in enumerate(fh, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                cols = line.split("\t")
                if cols[0] == "meta" and len(cols) == 3:
                    meta[cols[1]] = int(cols[2])
                elif cols[0] == "E" and len(cols) == 4:
                    emissions[(cols[1], _unescape(cols[2]))] = float(cols[3])
                elif cols[0] == "T" and len(cols) == 4:
                    transitions[(cols[1], cols[2])] = float(cols[3])
                else:
                    raise ValueError(f"line {line_no}: unrecognized record")
        return cls(
            emissions=emissions,
            transitions=transitions,
            epochs=meta["epochs"],
            seed=meta["seed"],
        )


def sequence_score(
    model: TaggerModel, tokens: Sequence[Token | str], tags: Sequence[str]
) -> float:
    """Total model score of a full tag sequence for the given tokens."""
    words = _surfaces(tokens)
    if len(words) != len(tags):
        raise ValueError("tokens and tags must have equal length")
    total = 0.0
    prev = _START
    for i, tag in enumerate(tags):
        total += model.transition_score(prev, tag)
        total += model.emission_score(featurize(words, i), tag)
        prev = tag
    return total


def predict(model: TaggerModel, tokens: Sequence[Token | str]) -> tuple[str, ...]:
    """Exact Viterbi decode.

    Among all maximum-score tag sequences, returns the lexicographically
    smallest under the canonical TAGS order (O first, so the all-zero model
    yields all O). Computed as a backward DP over suffix scores followed by
    a greedy forward pass; with exact arithmetic this equals full
    enumeration.
    """
    words = _surfaces(tokens)
    n = len(words)
    if n == 0:
        return ()
    emit = [
        tuple(model.emission_score(featurize(words, i), tag) for tag in TAGS)
        for i in range(n)
    ]
    trans = {
        prev: tuple(model.transition_score(prev, tag) for tag in TAGS)
        for prev in (_START, *TAGS)
    }
    # suffix[i][t]: best score attainable over positions i+1..n-1 given tag t at i
    suffix: list[tuple[float, ...]] = [(0.0,) * len(TAGS)] * n
    for i in range(n - 2, -1, -1):
        nxt = suffix[i + 1]
        row = []
        for t in range(len(TAGS)):
            tr = trans[TAGS[t]]
            row.append(max(tr[u] + emit[i + 1][u] + nxt[u] for u in range(len(TAGS))))
        suffix[i] = tuple(row)
    out: list[str] = []
    prev = _START
    for i in range(n):
        tr = trans[prev]
        best_t = 0
        best_score = tr[0] + emit[i][0] + suffix[i][0]
        for t in range(1, len(TAGS)):
            score = tr[t] + emit[i][t] + suffix[i][t]
            if score > best_score:
                best_t, best_score = t, score
        out.append(TAGS[best_t])
        prev = TAGS[best_t]
    return tuple(out)


def extract_spans(
    tags: Sequence[str],
    tokens: Sequence[Token | str],
    text: str | None = None,
) -> tuple[Span, ...]:
    """Decode BIO tags into spans; total over every tag combination.

    A span is a maximal run starting at B-ANS continuing through I-ANS; a
    stray I-ANS with no open span is repaired to start a new one. Character
    offsets come from Token inputs directly; plain-string tokens are laid
    out as if joined by single spaces. When ``text`` is given, span text is
    the exact slice of it, otherwise the space-joined surfaces.
    """
    words = _surfaces(tokens)
    if len(tags) != len(words):
        raise ValueError("tags and tokens must have equal length")
    if tokens and isinstance(tokens[0], Token):
        starts = [t.char_start for t in tokens]  # type: ignore[union-attr]
        ends = [t.char_end for t in tokens]  # type: ignore[union-attr]
    else:
        starts, ends = [], []
        at = 0
        for w in words:
            starts.append(at)
            ends.append(at + len(w))
            at += len(w) + 1

    def close(s: int, e: int) -> Span:
        cs, ce = starts[s], ends[e - 1]
        surface = text[cs:ce] if text is not None else " ".join(words[s:e])
        return Span(s, e, cs, ce, surface)

    spans: list[Span] = []
    start: int | None = None
    for i, tag in enumerate(tags):
        if tag == "B-ANS" or (tag == "I-ANS" and start is None):
            if start is not None:
                spans.append(close(start, i))
            start = i
        elif tag == "O" and start is not None:
            spans.append(close(start, i))
            start = None
    if start is not None:
        spans.append(close(start, len(tags)))
    return tuple(spans)


def _sequence_delta(
    gold: Sequence[str],
    pred: Sequence[str],
    feats: Sequence[tuple[str, ...]],
) -> dict[tuple[str, str, str], float]:
    delta: dict[tuple[str, str, str], float] = {}

    def bump(key: tuple[str, str, str], amount: float) -> None:
        delta[key] = delta.get(key, 0.0) + amount

    prev_g, prev_p = _START, _START
    for i in range(len(feats)):
        if gold[i] != pred[i]:
            for feat in feats[i]:
                bump(("E", gold[i], feat), 1.0)
                bump(("E", pred[i], feat), -1.0)
        if (prev_g, gold[i]) != (prev_p, pred[i]):
            bump(("T", prev_g, gold[i]), 1.0)
            bump(("T", prev_p, pred[i]), -1.0)
        prev_g, prev_p = gold[i], pred[i]
    return delta


_MAX_REFITS = 50


def train(
    data: Sequence[TagSequence],
    epochs: int = 10,
    seed: int = 0,
) -> TaggerModel:
    """Averaged structured perceptron training.

    Each epoch visits the data in a fresh seed-derived shuffle. A visit
    decodes the instance with the current weights and, while the decode is
    wrong, moves weights toward the gold features and away from the
    predicted ones, so each visit leaves its instance fit (a single
    instance is memorized within one epoch; a bounded retry cap guards
    non-separable degenerates). The returned weights average the per-visit
    state over all visits. Fully deterministic given (data, epochs, seed).
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if not data:
        raise ValueError("no training instances")
    rng = random.Random(seed)
    weights: dict[tuple[str, str, str], float] = {}
    totals: dict[tuple[str, str, str], float] = {}
    stamps: dict[tuple[str, str, str], int] = {}
    live = TaggerModel()
    all_feats = [
        tuple(featurize(inst.tokens, i) for i in range(len(inst.tokens)))
        for inst in data
    ]
    order = list(range(len(data)))
    step = 0
    for _ in range(epochs):
        rng.shuffle(order)
        for idx in order:
            step += 1
            inst = data[idx]
            for _refit in range(_MAX_REFITS):
                pred = predict(live, inst.tokens)
                if pred == inst.tags:
                    break
                for key, amount in _sequence_delta(
                    inst.tags, pred, all_feats[idx]
                ).items():
                    if amount == 0.0:
                        continue
                    current = weights.get(key, 0.0)
                    totals[key] = totals.get(key, 0.0) + current * (
                        step - stamps.get(key, 0)
                    )
                    stamps[key] = step
                    weights[key] = current + amount
                    kind, a, b = key
                    target = live.emissions if kind == "E" else live.transitions
                    target[(a, b)] = current + amount
    model = TaggerModel(epochs=epochs, seed=seed)
    for key, value in weights.items():
        total = totals.get(key, 0.0) + value * (step - stamps[key] + 1)
        avg = total / step
        if avg == 0.0:
            continue
        kind, a, b = key
        target = model.emissions if kind == "E" else model.transitions
        target[(a, b)] = avg
    return model


@dataclass(frozen=True)
class SpanMetrics:
    """Exact-span-match counts with derived precision, recall, and F1.

    Undefined ratios (zero denominators) are reported as 0.0.
    """

    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def evaluate(model: TaggerModel, data: Sequence[TagSequence]) -> SpanMetrics:
    """Span-level exact-match metrics of model predictions against gold tags."""
    if not data:
        raise ValueError("no evaluation instances")
    tp = fp = fn = 0
    for inst in data:
        pred = predict(model, inst.tokens)
        gold = {(s.token_start, s.token_end) for s in extract_spans(inst.tags, inst.tokens)}
        mine = {(s.token_start, s.token_end) for s in extract_spans(pred, inst.tokens)}
        tp += len(gold & mine)
        fp += len(mine - gold)
        fn += len(gold - mine)
    return SpanMetrics(tp=tp, fp=fp, fn=fn)


def read_tagging_corpus(path: str) -> list[TagSequence]:
    """Read tagging instances from JSONL with "tokens" and "tags" arrays."""
    instances: list[TagSequence] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            tokens = obj.get("tokens")
            tags = obj.get("tags")
            if not isinstance(tokens, list) or not isinstance(tags, list):
                raise ValueError(f"line {line_no}: need 'tokens' and 'tags' arrays")
            try:
                instances.append(TagSequence(tuple(tokens), tuple(tags)))
            except ValueError as exc:
                raise ValueError(f"line {line_no}: {exc}") from exc
    return instances


def write_tagging_corpus(instances: Iterable[TagSequence], path: str) -> int:
    """Write tagging instances as JSONL; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            rec = {"tokens": list(inst.tokens), "tags": list(inst.tags)}
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count
