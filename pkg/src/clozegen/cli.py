"""Command-line surface.

Every pipeline stage runs in isolation from files, and chaining the stage
commands reproduces the end-to-end `pipeline` output byte for byte, since
all per-record randomness derives from --seed and record ids. Exit codes:
0 success, 1 fatal error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from collections.abc import Sequence

from .assembly import (
    DROP_MALFORMED,
    assemble_stage,
    extract_stage,
    generate_stage,
    lexicon_selector,
    pos_selector,
    read_stats,
    report_stats,
    run_pipeline,
    tagger_selector,
    train_seed,
    write_stats,
)
from .config import PipelineConfig
from .corpus import (
    DEFAULT_PLACEHOLDER,
    read_downstream_dataset,
    read_pretraining_corpus,
    write_mcq_dataset,
)
from .gae import DEFAULT_MASK, read_candidates, repurpose_all, write_candidates
from .pog import NgramPredictor, RemotePredictor, read_generated, write_generated
from .selectors import fit_pos_distribution, read_scored_lexicon
from .tagger import TaggerModel, evaluate, read_tagging_corpus, train, write_tagging_corpus

log = logging.getLogger(__name__)


def _count_skips(drops: Counter[str]):
    def on_skip(err: Exception) -> None:
        drops[DROP_MALFORMED] += 1

    return on_skip


def _validate_masks(candidates, mask_token: str, strict: bool, drops: Counter[str]):
    valid = []
    for candidate in candidates:
        item = candidate[0] if isinstance(candidate, tuple) else candidate
        try:
            item.validate_mask(mask_token)
        except ValueError as exc:
            if strict:
                raise
            log.warning("skipping candidate %s: %s", item.id, exc)
            drops[DROP_MALFORMED] += 1
            continue
        valid.append(candidate)
    return valid


def cmd_repurpose(args: argparse.Namespace) -> None:
    drops: Counter[str] = Counter()
    samples = read_downstream_dataset(
        args.downstream,
        placeholder=args.placeholder,
        strict=args.strict,
        on_skip=_count_skips(drops),
    )
    instances = repurpose_all(
        samples, args.placeholder, strict=args.strict, on_skip=_count_skips(drops)
    )
    n = write_tagging_corpus(instances, args.output)
    print(f"wrote {n} tagging instances to {args.output}"
          + (f" ({drops[DROP_MALFORMED]} skipped)" if drops[DROP_MALFORMED] else ""))


def cmd_train_tagger(args: argparse.Namespace) -> None:
    data = read_tagging_corpus(args.data)
    model = train(data, args.epochs, train_seed(args.seed))
    model.save(args.model)
    print(f"trained on {len(data)} instances ({args.epochs} epochs), saved {args.model}")


def cmd_eval_tagger(args: argparse.Namespace) -> None:
    model = TaggerModel.load(args.model)
    data = read_tagging_corpus(args.data)
    metrics = evaluate(model, data)
    print(
        json.dumps(
            {
                "precision": metrics.precision,
                "recall": metrics.recall,
                "f1": metrics.f1,
                "tp": metrics.tp,
                "fp": metrics.fp,
                "fn": metrics.fn,
            }
        )
    )


def _build_cli_selector(args: argparse.Namespace):
    if args.selector == "tagger":
        if not args.model:
            args.parser.error("--model is required when --selector is tagger")
        return tagger_selector(TaggerModel.load(args.model))
    if args.selector == "pos":
        if not args.downstream:
            args.parser.error("--downstream is required when --selector is pos")
        samples = list(
            read_downstream_dataset(
                args.downstream, placeholder=args.placeholder, strict=args.strict
            )
        )
        dist = fit_pos_distribution(samples)
        return pos_selector(dist, args.seed)
    if not args.lexicon:
        args.parser.error("--lexicon is required when --selector is lexicon")
    return lexicon_selector(read_scored_lexicon(args.lexicon, args.lexicon_threshold))


def cmd_extract(args: argparse.Namespace) -> None:
    selector = _build_cli_selector(args)
    drops: Counter[str] = Counter()
    pairs = list(
        read_pretraining_corpus(
            args.corpus, strict=args.strict, on_skip=_count_skips(drops)
        )
    )
    candidates = extract_stage(
        pairs,
        selector,
        mask_token=args.mask_token,
        placeholder=args.placeholder,
        jobs=args.jobs,
        drops=drops,
    )
    write_candidates(candidates, args.output)
    dropped = sum(drops.values())
    print(f"wrote {len(candidates)} candidates to {args.output} ({dropped} dropped)")


def _build_cli_predictor(args: argparse.Namespace):
    if args.predictor == "remote":
        if not args.endpoint:
            args.parser.error("--endpoint is required when --predictor is remote")
        return RemotePredictor(args.endpoint)
    if not args.corpus:
        args.parser.error("--corpus is required when --predictor is builtin")
    documents = (
        pair.document
        for pair in read_pretraining_corpus(args.corpus, strict=args.strict)
    )
    return NgramPredictor.from_documents(documents)


def cmd_generate(args: argparse.Namespace) -> None:
    predictor = _build_cli_predictor(args)
    drops: Counter[str] = Counter()
    candidates = list(
        read_candidates(args.candidates, strict=args.strict, on_skip=_count_skips(drops))
    )
    candidates = _validate_masks(candidates, args.mask_token, args.strict, drops)
    records = generate_stage(
        candidates,
        predictor,
        seed=args.seed,
        k=args.num_options,
        top_n=args.top_n,
        mask_token=args.mask_token,
        similarity_threshold=args.similarity_threshold,
        jobs=args.jobs,
        drops=drops,
    )
    write_generated(records, args.output)
    dropped = sum(drops.values())
    print(f"wrote {len(records)} generated records to {args.output} ({dropped} dropped)")


def cmd_assemble(args: argparse.Namespace) -> None:
    drops: Counter[str] = Counter()
    records = list(
        read_generated(args.generated, strict=args.strict, on_skip=_count_skips(drops))
    )
    records = _validate_masks(records, args.mask_token, args.strict, drops)
    samples = assemble_stage(
        records,
        seed=args.seed,
        mask_token=args.mask_token,
        placeholder=args.placeholder,
        jobs=args.jobs,
    )
    n = write_mcq_dataset(samples, args.output)
    print(f"wrote {n} samples to {args.output}")


def cmd_stats(args: argparse.Namespace) -> None:
    stats, drops = read_stats(args.stats)
    print(report_stats(stats, drops))


def cmd_pipeline(args: argparse.Namespace) -> None:
    config = PipelineConfig.from_file(args.config)
    overrides: dict[str, object] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.strict is not None:
        overrides["strict"] = args.strict
    if overrides:
        config = config.replace(**overrides)
    if not config.corpus_path:
        raise ValueError("config needs corpus_path")
    drops: Counter[str] = Counter()
    pairs = list(
        read_pretraining_corpus(
            config.corpus_path, strict=config.strict, on_skip=_count_skips(drops)
        )
    )
    downstream = None
    if config.downstream_path:
        downstream = list(
            read_downstream_dataset(
                config.downstream_path,
                placeholder=config.placeholder,
                strict=config.strict,
                on_skip=_count_skips(drops),
            )
        )
    result = run_pipeline(config, pairs, downstream)
    write_mcq_dataset(result.samples, config.output_path)
    drops.update(result.drops)
    if config.stats_path:
        write_stats(result.stats, drops, config.stats_path)
    print(report_stats(result.stats, drops))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clozegen",
        description="Build multiple-choice cloze pre-training data from a document-summary corpus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("repurpose", help="convert a downstream MCQ dataset into tagging data")
    p.add_argument("--downstream", required=True, help="downstream MCQ JSONL")
    p.add_argument("--output", required=True, help="tagging JSONL to write")
    p.add_argument("--placeholder", default=DEFAULT_PLACEHOLDER)
    p.add_argument("--strict", action="store_true", help="abort on record errors")
    p.set_defaults(func=cmd_repurpose)

    p = sub.add_parser("train-tagger", help="train the answer-span tagger")
    p.add_argument("--data", required=True, help="tagging JSONL")
    p.add_argument("--model", required=True, help="model file to write")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_tagger)

    p = sub.add_parser("eval-tagger", help="span-level P/R/F1 of a model on tagging data")
    p.add_argument("--data", required=True, help="tagging JSONL")
    p.add_argument("--model", required=True, help="model file to load")
    p.set_defaults(func=cmd_eval_tagger)

    p = sub.add_parser("extract", help="select answers and mask summaries into cloze candidates")
    p.add_argument("--corpus", required=True, help="pre-training corpus JSONL")
    p.add_argument("--output", required=True, help="candidate JSONL to write")
    p.add_argument("--selector", choices=("tagger", "pos", "lexicon"), default="tagger")
    p.add_argument("--model", help="tagger model file (selector=tagger)")
    p.add_argument("--downstream", help="downstream MCQ JSONL (selector=pos)")
    p.add_argument("--lexicon", help="word<TAB>score file (selector=lexicon)")
    p.add_argument("--lexicon-threshold", type=float, default=0.0)
    p.add_argument("--mask-token", default=DEFAULT_MASK)
    p.add_argument("--placeholder", default=DEFAULT_PLACEHOLDER)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="abort on record errors")
    p.set_defaults(func=cmd_extract, parser=p)

    p = sub.add_parser("generate", help="sample distractors for cloze candidates")
    p.add_argument("--candidates", required=True, help="candidate JSONL")
    p.add_argument("--output", required=True, help="generated JSONL to write")
    p.add_argument("--predictor", choices=("builtin", "remote"), default="builtin")
    p.add_argument("--corpus", help="corpus JSONL to fit the builtin predictor on")
    p.add_argument("--endpoint", help="fill-mask service base URL (predictor=remote)")
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--num-options", type=int, default=5, help="options per sample (k)")
    p.add_argument("--similarity-threshold", type=float, default=0.8)
    p.add_argument("--mask-token", default=DEFAULT_MASK)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="abort on record errors")
    p.set_defaults(func=cmd_generate, parser=p)

    p = sub.add_parser("assemble", help="shuffle options and emit the final MCQ dataset")
    p.add_argument("--generated", required=True, help="generated JSONL")
    p.add_argument("--output", required=True, help="MCQ dataset JSONL to write")
    p.add_argument("--mask-token", default=DEFAULT_MASK)
    p.add_argument("--placeholder", default=DEFAULT_PLACEHOLDER)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="abort on record errors")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("stats", help="render a stats JSON file as a table")
    p.add_argument("stats", help="stats JSON written by the pipeline")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pipeline", help="run extract, generate, and assemble from a config")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--jobs", type=int, default=None, help="override config jobs")
    p.add_argument("--strict", action="store_const", const=True, default=None,
                   help="override config strict mode")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
