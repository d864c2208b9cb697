"""Measure tagger accuracy and training time on the marker corpus.

Trains on an 80/20 split at several corpus sizes and epoch counts and
prints held-out span precision/recall/F1 with wall-clock seconds.
"""

from __future__ import annotations

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from clozegen.synthetic import generate_tagging_corpus
from clozegen.tagger import evaluate, train


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 500, 1000])
    ap.add_argument("--epochs", type=int, nargs="+", default=[1, 5, 10])
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    print(f"{'size':>6} {'epochs':>6} {'P':>7} {'R':>7} {'F1':>7} {'sec':>7}")
    for size in args.sizes:
        corpus = generate_tagging_corpus(size, seed=args.seed)
        cut = int(size * 0.8)
        train_split, held_out = corpus[:cut], corpus[cut:]
        for epochs in args.epochs:
            start = time.monotonic()
            model = train(train_split, epochs=epochs, seed=args.seed)
            elapsed = time.monotonic() - start
            m = evaluate(model, held_out)
            print(
                f"{size:>6} {epochs:>6} {m.precision:>7.4f} {m.recall:>7.4f}"
                f" {m.f1:>7.4f} {elapsed:>7.2f}"
            )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
