"""Final assembly and pipeline orchestration.

Shuffles each candidate's options, sets the gold index as the label,
rewrites the mask token to the downstream placeholder, and wires the
stages end to end with per-reason drop accounting. Per-record randomness
comes from streams keyed on (master seed, stage, record id), so outputs
are byte-identical across runs and worker counts.
"""

from __future__ import annotations

import json
import os
import random
from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TypeVar

from .config import PipelineConfig
from .corpus import DEFAULT_PLACEHOLDER, CorpusStats, McqSample, PretrainingPair
from .gae import (
    DEFAULT_MASK,
    ClozeCandidate,
    extract_gold,
    filter_single_answer,
    make_cloze,
    repurpose_all,
)
from .pog import (
    FillMaskPredictor,
    PredictorError,
    make_predictor,
    predict_mask,
    sample_distractors,
)
from .seeds import derive_seed, stream
from .selectors import (
    PosDistribution,
    PosTagger,
    ScoredLexicon,
    builtin_pos_tagger,
    fit_pos_distribution,
    lexicon_pos_tagger,
    read_pos_lexicon,
    read_scored_lexicon,
    select_by_lexicon,
    select_by_pos,
)
from .tagger import Span, TaggerModel, train

DROP_ZERO_SPAN = "zero-span"
DROP_MULTI_SPAN = "multi-span"
DROP_RECORD_ERROR = "record-error"
DROP_INSUFFICIENT = "insufficient-candidates"
DROP_PREDICTOR_ERROR = "predictor-error"
DROP_MALFORMED = "malformed-record"

# drop reasons inside the conservation identities, in report order
GAE_DROPS = (DROP_ZERO_SPAN, DROP_MULTI_SPAN, DROP_RECORD_ERROR)
POG_DROPS = (DROP_INSUFFICIENT, DROP_PREDICTOR_ERROR)

_T = TypeVar("_T")
_R = TypeVar("_R")

Selector = Callable[[PretrainingPair], tuple[Span, ...]]

_STAGE_SELECT = "select-pos"
_STAGE_SAMPLE = "pog-sample"
_STAGE_ASSEMBLE = "assemble"
_STAGE_TRAIN = "tagger-train"


def _map_ordered(fn: Callable[[_T], _R], items: Sequence[_T], jobs: int) -> list[_R]:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def assemble_sample(
    candidate: ClozeCandidate,
    distractors: Sequence[str],
    rng: random.Random,
    *,
    mask_token: str = DEFAULT_MASK,
    placeholder: str = DEFAULT_PLACEHOLDER,
) -> McqSample:
    """Shuffle gold plus distractors into the final option order.

    The gold answer's option index becomes the label, and the question's
    mask token is rewritten to the downstream placeholder, yielding a
    sample schema-identical to the downstream dataset.
    """
    candidate.validate_mask(mask_token)
    options = [candidate.answer, *distractors]
    rng.shuffle(options)
    label = options.index(candidate.answer)
    pos = candidate.question.index(mask_token)
    question = (
        candidate.question[:pos]
        + placeholder
        + candidate.question[pos + len(mask_token):]
    )
    sample = McqSample(
        id=candidate.id,
        context=candidate.context,
        question=question,
        options=tuple(options),
        label=label,
    )
    sample.validate_placeholder(placeholder)
    return sample


def tagger_selector(model: TaggerModel) -> Selector:
    """All spans the trained tagger extracts from a pair's summary."""

    def select(pair: PretrainingPair) -> tuple[Span, ...]:
        return extract_gold(model, pair)

    return select


def pos_selector(
    dist: PosDistribution, seed: int, pos_tagger: PosTagger = builtin_pos_tagger
) -> Selector:
    """POS-distribution baseline wrapped in the common selector shape."""

    def select(pair: PretrainingPair) -> tuple[Span, ...]:
        rng = stream(seed, _STAGE_SELECT, pair.id)
        span = select_by_pos(dist, pair, pos_tagger, rng)
        return (span,) if span is not None else ()

    return select


def lexicon_selector(lexicon: ScoredLexicon) -> Selector:
    """Scored-lexicon baseline wrapped in the common selector shape."""

    def select(pair: PretrainingPair) -> tuple[Span, ...]:
        span = select_by_lexicon(lexicon, pair)
        return (span,) if span is not None else ()

    return select


def extract_stage(
    pairs: Sequence[PretrainingPair],
    selector: Selector,
    *,
    mask_token: str = DEFAULT_MASK,
    placeholder: str = DEFAULT_PLACEHOLDER,
    jobs: int = 1,
    drops: Counter[str] | None = None,
) -> list[ClozeCandidate]:
    """Run answer selection and masking over all pairs, in input order.

    A pair whose summary already contains the mask token or the
    placeholder cannot yield a well-formed question and is dropped as a
    record error before selection; zero- and multi-span selections are
    dropped under their own reasons.
    """

    def work(pair: PretrainingPair) -> tuple[str, ClozeCandidate | None]:
        if mask_token in pair.summary or placeholder in pair.summary:
            return DROP_RECORD_ERROR, None
        spans = selector(pair)
        span = filter_single_answer(spans)
        if span is None:
            return (DROP_ZERO_SPAN if not spans else DROP_MULTI_SPAN), None
        return "", make_cloze(pair, span, mask_token)

    out: list[ClozeCandidate] = []
    for reason, candidate in _map_ordered(work, pairs, jobs):
        if candidate is None:
            if drops is not None:
                drops[reason] += 1
        else:
            out.append(candidate)
    return out


def generate_stage(
    candidates: Sequence[ClozeCandidate],
    predictor: FillMaskPredictor,
    *,
    seed: int = 0,
    k: int = 5,
    top_n: int = 10,
    mask_token: str = DEFAULT_MASK,
    continuation_marker: str = "##",
    similarity_threshold: float = 0.8,
    jobs: int = 1,
    drops: Counter[str] | None = None,
) -> list[tuple[ClozeCandidate, list[str]]]:
    """Query the predictor and sample k-1 distractors per candidate.

    Predictor failures and candidates left with fewer than k-1 valid
    options are dropped under their own reasons; survivors keep input
    order.
    """

    def work(candidate: ClozeCandidate) -> tuple[str, list[str] | None]:
        try:
            predictions = predict_mask(predictor, candidate, mask_token, top_n)
        except PredictorError:
            return DROP_PREDICTOR_ERROR, None
        rng = stream(seed, _STAGE_SAMPLE, candidate.id)
        picked = sample_distractors(
            predictions,
            candidate.answer,
            k - 1,
            rng,
            continuation_marker=continuation_marker,
            similarity_threshold=similarity_threshold,
        )
        if picked is None:
            return DROP_INSUFFICIENT, None
        return "", picked

    out: list[tuple[ClozeCandidate, list[str]]] = []
    for candidate, (reason, picked) in zip(
        candidates, _map_ordered(work, candidates, jobs)
    ):
        if picked is None:
            if drops is not None:
                drops[reason] += 1
        else:
            out.append((candidate, picked))
    return out


def assemble_stage(
    records: Sequence[tuple[ClozeCandidate, Sequence[str]]],
    *,
    seed: int = 0,
    mask_token: str = DEFAULT_MASK,
    placeholder: str = DEFAULT_PLACEHOLDER,
    jobs: int = 1,
) -> list[McqSample]:
    """Assemble final samples with per-record option shuffles."""

    def work(record: tuple[ClozeCandidate, Sequence[str]]) -> McqSample:
        candidate, distractors = record
        rng = stream(seed, _STAGE_ASSEMBLE, candidate.id)
        return assemble_sample(
            candidate,
            distractors,
            rng,
            mask_token=mask_token,
            placeholder=placeholder,
        )

    return _map_ordered(work, records, jobs)


def train_seed(master_seed: int) -> int:
    """The derived seed every tagger training run uses for a master seed."""
    return derive_seed(master_seed, _STAGE_TRAIN)


@dataclass
class PipelineResult:
    """Everything a pipeline run produced, stage by stage."""

    samples: list[McqSample]
    candidates: list[ClozeCandidate]
    generated: list[tuple[ClozeCandidate, list[str]]]
    stats: CorpusStats
    drops: Counter[str] = field(default_factory=Counter)
    model: TaggerModel | None = None


def _build_selector(
    config: PipelineConfig,
    downstream: Sequence[McqSample] | None,
    model: TaggerModel | None,
    lexicon: ScoredLexicon | None,
    pos_tagger: PosTagger | None,
) -> tuple[Selector, TaggerModel | None]:
    tagger_fn = pos_tagger
    if tagger_fn is None:
        if config.pos_lexicon_path:
            tagger_fn = lexicon_pos_tagger(read_pos_lexicon(config.pos_lexicon_path))
        else:
            tagger_fn = builtin_pos_tagger
    if config.selector == "tagger":
        if model is None:
            if config.model_path and os.path.exists(config.model_path):
                model = TaggerModel.load(config.model_path)
            elif downstream:
                instances = list(
                    repurpose_all(
                        downstream, config.placeholder, strict=config.strict
                    )
                )
                if not instances:
                    raise ValueError("downstream data yielded no tagging instances")
                model = train(instances, config.epochs, train_seed(config.seed))
                if config.model_path:
                    model.save(config.model_path)
            else:
                raise ValueError(
                    "tagger selector needs downstream data or an existing model_path"
                )
        return tagger_selector(model), model
    if config.selector == "pos":
        if not downstream:
            raise ValueError("pos selector needs downstream data")
        dist = fit_pos_distribution(downstream, tagger_fn)
        return pos_selector(dist, config.seed, tagger_fn), None
    if lexicon is None:
        if not config.lexicon_path:
            raise ValueError("lexicon selector needs lexicon_path")
        lexicon = read_scored_lexicon(config.lexicon_path, config.lexicon_threshold)
    return lexicon_selector(lexicon), None


def run_pipeline(
    config: PipelineConfig,
    corpus: Iterable[PretrainingPair],
    downstream: Sequence[McqSample] | None = None,
    *,
    model: TaggerModel | None = None,
    lexicon: ScoredLexicon | None = None,
    pos_tagger: PosTagger | None = None,
    predictor: FillMaskPredictor | None = None,
) -> PipelineResult:
    """Execute extract, generate, and assemble end to end.

    Every input pair is either emitted or attributed to exactly one drop
    reason: input = post_gae + zero-span + multi-span + record-error, and
    post_gae = post_pog + insufficient-candidates + predictor-error.
    Deterministic for fixed inputs and config, regardless of jobs.
    """
    pairs = list(corpus)
    drops: Counter[str] = Counter()
    selector, model = _build_selector(config, downstream, model, lexicon, pos_tagger)
    if predictor is None:
        predictor = make_predictor(
            config.predictor_spec(), (p.document for p in pairs)
        )
    candidates = extract_stage(
        pairs,
        selector,
        mask_token=config.mask_token,
        placeholder=config.placeholder,
        jobs=config.jobs,
        drops=drops,
    )
    generated = generate_stage(
        candidates,
        predictor,
        seed=config.seed,
        k=config.k,
        top_n=config.top_n,
        mask_token=config.mask_token,
        continuation_marker=config.continuation_marker,
        similarity_threshold=config.similarity_threshold,
        jobs=config.jobs,
        drops=drops,
    )
    samples = assemble_stage(
        generated,
        seed=config.seed,
        mask_token=config.mask_token,
        placeholder=config.placeholder,
        jobs=config.jobs,
    )
    stats = CorpusStats(
        input_count=len(pairs),
        post_gae_count=len(candidates),
        post_pog_count=len(generated),
    )
    assert stats.input_count == stats.post_gae_count + sum(
        drops[r] for r in GAE_DROPS
    ), "GAE drop accounting out of balance"
    assert stats.post_gae_count == stats.post_pog_count + sum(
        drops[r] for r in POG_DROPS
    ), "POG drop accounting out of balance"
    return PipelineResult(
        samples=samples,
        candidates=candidates,
        generated=generated,
        stats=stats,
        drops=drops,
        model=model,
    )


def stats_to_dict(stats: CorpusStats, drops: Counter[str] | None = None) -> dict:
    return {
        "input": stats.input_count,
        "post_gae": stats.post_gae_count,
        "post_pog": stats.post_pog_count,
        "drops": {reason: int(n) for reason, n in sorted((drops or {}).items()) if n},
    }


def stats_from_dict(data: dict) -> tuple[CorpusStats, Counter[str]]:
    stats = CorpusStats(
        input_count=int(data["input"]),
        post_gae_count=int(data["post_gae"]),
        post_pog_count=int(data["post_pog"]),
    )
    raw = data.get("drops", {})
    if not isinstance(raw, dict):
        raise ValueError("'drops' must be an object")
    return stats, Counter({str(k): int(v) for k, v in raw.items()})


def write_stats(stats: CorpusStats, drops: Counter[str] | None, path: str) -> None:
    """Write the machine-readable stats JSON; byte-deterministic."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(stats_to_dict(stats, drops), fh, indent=2)
        fh.write("\n")


def read_stats(path: str) -> tuple[CorpusStats, Counter[str]]:
    with open(path, encoding="utf-8") as fh:
        return stats_from_dict(json.load(fh))


def report_stats(stats: CorpusStats, drops: Counter[str] | None = None) -> str:
    """Human-readable stage table with survival rates and drop reasons."""

    def pct(count: int) -> str:
        if stats.input_count == 0:
            return "-"
        return f"{100.0 * count / stats.input_count:.1f}%"

    width = max(len(str(stats.input_count)), 1)
    lines = [
        f"input     {stats.input_count:>{width}}  {pct(stats.input_count)}",
        f"post-gae  {stats.post_gae_count:>{width}}  {pct(stats.post_gae_count)}",
        f"post-pog  {stats.post_pog_count:>{width}}  {pct(stats.post_pog_count)}",
    ]
    reported = {reason: n for reason, n in (drops or {}).items() if n}
    if reported:
        lines.append("drops:")
        name_width = max(len(reason) for reason in reported)
        for reason in sorted(reported):
            lines.append(f"  {reason:<{name_width}}  {reported[reason]}")
    return "\n".join(lines)
