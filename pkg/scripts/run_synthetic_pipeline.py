"""Run the full pipeline on generated data and write every artifact.

Produces corpus.jsonl, downstream.jsonl, config.json, dataset.jsonl,
stats.json, and tagger.model under --outdir, then prints the survival
report. Useful as a smoke test and as a worked example of the file
formats.
"""

from __future__ import annotations

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from clozegen.assembly import report_stats, run_pipeline, write_stats
from clozegen.config import PipelineConfig
from clozegen.corpus import write_mcq_dataset, write_pretraining_corpus
from clozegen.synthetic import generate_corpus, generate_downstream


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="synthetic_run", help="output directory")
    ap.add_argument("--pairs", type=int, default=1000, help="corpus size")
    ap.add_argument("--downstream", type=int, default=100, help="labelled samples")
    ap.add_argument("--selector", default="tagger", choices=["tagger", "pos"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    pairs = generate_corpus(args.pairs, seed=args.seed)
    downstream = generate_downstream(args.downstream, seed=args.seed + 1)
    write_pretraining_corpus(pairs, outdir / "corpus.jsonl")
    write_mcq_dataset(downstream, outdir / "downstream.jsonl")

    config = PipelineConfig(
        corpus_path=str(outdir / "corpus.jsonl"),
        downstream_path=str(outdir / "downstream.jsonl"),
        output_path=str(outdir / "dataset.jsonl"),
        stats_path=str(outdir / "stats.json"),
        model_path=str(outdir / "tagger.model") if args.selector == "tagger" else None,
        selector=args.selector,
        seed=args.seed,
        jobs=args.jobs,
    )
    config.save(outdir / "config.json")

    result = run_pipeline(config, pairs, downstream)
    write_mcq_dataset(result.samples, config.output_path)
    write_stats(result.stats, result.drops, config.stats_path)
    print(report_stats(result.stats, result.drops))
    print(f"wrote {len(result.samples)} samples to {config.output_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
