"""Regularisation path of professional search on a crowd with a few experts.

    python scripts/support_path.py --experts 5 --agents 100

Prints, for each lambda of the default grid, the LOOCV error, the support
size and how many experts the support contains.
"""

import argparse

import numpy as np

from crowdtrust.core import LabelAlphabet, accuracy, split_queries
from crowdtrust.methods import run_method
from crowdtrust.modelsel import LambdaGrid, fit_binary, loocv_select
from crowdtrust.optim import support
from crowdtrust.simulate import BINARY_LABELS, CrowdScenario, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--agents", type=int, default=100)
    ap.add_argument("--experts", type=int, default=5)
    ap.add_argument("--queries", type=int, default=200)
    ap.add_argument("--train-count", type=int, default=60)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    rel = np.r_[np.full(args.experts, 0.95), np.full(args.agents - args.experts, 0.55)]
    scenario = CrowdScenario(args.agents, args.queries, LabelAlphabet(BINARY_LABELS), rel, 1.0, seed=args.seed)
    matrix, key = generate(scenario)
    split = split_queries(key, args.train_count, args.seed)
    experts = set(range(args.experts))

    grid = LambdaGrid.default("l1")
    cv = loocv_select(matrix, key, split.train, "l1", grid)
    print(f"{'lambda':>8} {'loocv':>6} {'support':>8} {'experts':>8}")
    for lam in grid:
        w, _, _ = fit_binary(matrix, key, split.train, "l1", lam=lam)
        s = support(w)
        mark = "  <- chosen" if lam == cv.chosen else ""
        print(f"{lam:>8.2f} {cv.per_lambda_error[lam]:>6.3f} {len(s):>8} {len(s & experts):>8}{mark}")

    mv = accuracy(run_method("majority", matrix).result, key, split.test)
    pro = accuracy(run_method("professional", matrix, key, split.train).result, key, split.test)
    print(f"\ntest accuracy: majority {mv:.3f}, professional search {pro:.3f}")


if __name__ == "__main__":
    main()
