"""Solver against the brute-force oracle on random small hinge problems.

    python scripts/oracle_check.py --problems 500
"""

import argparse
import time

import numpy as np

from crowdtrust.optim import HingeProblem, objective, train_hinge
from crowdtrust.simulate import brute_force_weights, minimizer_box


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--problems", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = []
    start = time.perf_counter()
    for _ in range(args.problems):
        m, T = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        penalty = str(rng.choice(["l1", "l2"]))
        lam = float(rng.choice([0.0, 0.1, 1.0, 10.0] if penalty == "l1" else [0.1, 1.0, 10.0]))
        p = HingeProblem(rng.integers(-1, 2, size=(T, m)).astype(float), rng.choice([-1.0, 1.0], T), lam, penalty)
        w, report = train_hinge(p)
        _, best = brute_force_weights(p, box=minimizer_box(p))
        rows.append((penalty, lam, objective(p, w) - best, report.iterations))

    print(f"{args.problems} problems in {time.perf_counter() - start:.1f}s")
    print(f"{'penalty':<8} {'lambda':>6} {'count':>6} {'max gap':>10} {'mean iters':>10}")
    for key in sorted({(r[0], r[1]) for r in rows}):
        sel = [r for r in rows if (r[0], r[1]) == key]
        gaps = np.array([r[2] for r in sel])
        print(f"{key[0]:<8} {key[1]:>6g} {len(sel):>6} {np.abs(gaps).max():>10.2e} {np.mean([r[3] for r in sel]):>10.0f}")


if __name__ == "__main__":
    main()
