"""Monte Carlo comparison of all six methods on a synthetic preset.

    python scripts/compare_presets.py --preset trec-like --seeds 20
    python scripts/compare_presets.py --preset exam-like --seeds 10 --train-count 10

Each seed draws a fresh crowd and a fresh train/test split; the table shows
mean test accuracy and its standard error.
"""

import argparse
import time

import numpy as np

from crowdtrust.core import accuracy, split_queries
from crowdtrust.methods import METHODS, SUPERVISED, TITLES, run_method
from crowdtrust.simulate import exam_like, trec_like

PRESETS = {"trec-like": (trec_like, 40), "exam-like": (exam_like, 10)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--preset", choices=sorted(PRESETS), default="trec-like")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--train-count", type=int)
    ap.add_argument("--methods", default=",".join(METHODS))
    args = ap.parse_args()

    load, default_train = PRESETS[args.preset]
    train_count = args.train_count or default_train
    methods = args.methods.split(",")
    accs = {m: [] for m in methods}
    start = time.perf_counter()
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        matrix, key = load(seed)
        split = split_queries(key, train_count, seed)
        row = []
        for m in methods:
            acc = accuracy(run_method(m, matrix, key, split.train).result, key, split.test)
            accs[m].append(acc)
            row.append(f"{100 * acc:6.2f}")
        print(f"seed {seed:3d}  " + "  ".join(row), flush=True)

    print(f"\n{args.preset}, {args.seeds} seeds, {train_count} training queries, {time.perf_counter() - start:.0f}s")
    width = max(len(TITLES[m]) for m in methods)
    for m in methods:
        a = 100 * np.array(accs[m])
        group = "supervised" if m in SUPERVISED else "unsupervised"
        print(f"{TITLES[m]:<{width}}  {group:<12}  {a.mean():7.2f} +/- {a.std(ddof=1) / np.sqrt(len(a)) if len(a) > 1 else 0:.2f}")


if __name__ == "__main__":
    main()
