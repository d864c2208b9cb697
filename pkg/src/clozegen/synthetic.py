"""Deterministic synthetic data generators.

Small fixture corpora for exercising the pipeline without external data.
Sentences mix function words, nouns, -ing/-ed verbs, and -ly adverbs, and
each summary carries exactly one all-caps answer token, a pattern the
tagger can learn from the matching tagging corpus. All generators are
pure functions of (count, seed).
"""

from __future__ import annotations

import random

from .corpus import DEFAULT_PLACEHOLDER, McqSample, PretrainingPair
from .seeds import stream
from .tagger import TagSequence

DETERMINERS = ("the", "a")

NOUNS = (
    "harbor", "village", "river", "market", "garden", "signal", "winter",
    "story", "music", "road", "tower", "bridge", "window", "letter",
    "mountain", "forest", "evening", "morning", "stone", "cloud", "field",
    "shadow", "corner", "voice", "paper", "engine", "anchor", "meadow",
    "lantern", "valley",
)

VERBS = (
    "walking", "singing", "drifting", "fading", "turned", "opened",
    "closed", "floating", "gathered", "waited",
)

ADVERBS = ("quickly", "slowly", "gently", "quietly", "barely", "openly")

ANSWERS = (
    "ZEPHYR", "QUARTZ", "FALCON", "MARBLE", "COBALT", "SAFFRON", "JUNIPER",
    "BASALT", "ORCHID", "TUNDRA", "GRANITE", "VELVET", "CANYON", "PRAIRIE",
    "GLACIER", "NEBULA", "TALON", "EMBER", "FJORD", "SONNET", "OPAL", "JADE",
    "REEF", "DUNE", "MONOLITH", "OBSIDIAN",
)


def _sentence_words(rng: random.Random) -> list[str]:
    # one noun, verb, and adverb guaranteed so every POS class is present
    words = [
        rng.choice(DETERMINERS),
        rng.choice(NOUNS),
        rng.choice(VERBS),
        rng.choice(ADVERBS),
    ]
    for _ in range(rng.randint(2, 6)):
        words.append(rng.choice(NOUNS))
    return words


def generate_tagging_corpus(n_sentences: int, seed: int) -> list[TagSequence]:
    """Sentences whose unique all-caps token is the tagged answer span."""
    rng = stream(seed, "synthetic-tagging")
    instances: list[TagSequence] = []
    for _ in range(n_sentences):
        words = _sentence_words(rng)
        answer = rng.choice(ANSWERS)
        at = rng.randrange(len(words) + 1)
        tokens = [*words[:at], answer, *words[at:]]
        tags = ["O"] * len(tokens)
        tags[at] = "B-ANS"
        instances.append(TagSequence(tuple(tokens), tuple(tags)))
    return instances


def _document(rng: random.Random, answer: str) -> str:
    sentences = []
    for _ in range(rng.randint(2, 4)):
        words = [rng.choice(DETERMINERS)]
        for _ in range(rng.randint(8, 14)):
            words.append(rng.choice(NOUNS + VERBS + ADVERBS))
        sentences.append(" ".join(words) + ".")
    mention = f"the {answer.lower()} near the {rng.choice(NOUNS)}."
    sentences.append(mention)
    return " ".join(sentences)


def generate_corpus(n_pairs: int, seed: int) -> list[PretrainingPair]:
    """Document/summary pairs; each summary holds one all-caps answer token."""
    rng = stream(seed, "synthetic-corpus")
    pairs: list[PretrainingPair] = []
    for i in range(n_pairs):
        words = _sentence_words(rng)
        answer = rng.choice(ANSWERS)
        at = rng.randrange(len(words) + 1)
        summary_words = [*words[:at], answer, *words[at:]]
        summary = " ".join(summary_words) + "."
        pairs.append(
            PretrainingPair(
                id=f"p{i:06d}",
                document=_document(rng, answer),
                summary=summary,
            )
        )
    return pairs


def generate_downstream(
    n_samples: int,
    seed: int,
    *,
    k: int = 5,
    placeholder: str = DEFAULT_PLACEHOLDER,
    gold_pool: tuple[str, ...] = ANSWERS,
) -> list[McqSample]:
    """Labelled MCQ samples in the downstream schema.

    Gold options come from gold_pool; distractor options are nouns. The
    question carries the placeholder where the gold option belongs, so
    repurposing reconstructs a single clean answer span.
    """
    rng = stream(seed, "synthetic-downstream")
    samples: list[McqSample] = []
    for i in range(n_samples):
        gold = rng.choice(gold_pool)
        words = _sentence_words(rng)
        at = rng.randrange(len(words) + 1)
        question_words = [*words[:at], placeholder, *words[at:]]
        question = " ".join(question_words) + "."
        pool = [n for n in NOUNS if n != gold.lower()]
        options = [gold, *rng.sample(pool, k - 1)]
        rng.shuffle(options)
        samples.append(
            McqSample(
                id=f"d{i:06d}",
                context=_document(rng, gold),
                question=question,
                options=tuple(options),
                label=options.index(gold),
            )
        )
    return samples
