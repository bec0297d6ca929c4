"""Random search for CFRD violations by order-3 CV PR boxes.

Reports how many random boxes violate, the largest violation found,
and the hand-checkable box a = b = (1, 0, -1), which violates by 4/9.
"""
import argparse

import numpy as np

from cvns.boxes import cv_pr_box
from cvns.ensembles import random_cv_pr_box
from cvns.moments import cfrd


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--bound", type=float, default=3.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    best, best_box, hits = -np.inf, None, 0
    for _ in range(args.trials):
        bhv = random_cv_pr_box(rng, 3, args.bound)
        v = cfrd(bhv).violation
        hits += v > 1e-9
        if v > best:
            best, best_box = v, bhv
    print(f"{hits} of {args.trials} order-3 boxes violate CFRD (fraction {hits / args.trials:.4f})")
    print(f"largest violation {best:.6g}")
    if best_box is not None:
        m = best_box[0, 0]
        print(f"  centres a = {np.round(m.da, 4).tolist()}, b = {np.round(m.db, 4).tolist()}")
    rep = cfrd(cv_pr_box(3, [1, 0, -1], [1, 0, -1]))
    print(f"a = b = (1, 0, -1): lhs {rep.lhs:.6f} rhs {rep.rhs:.6f} violation {rep.violation:.6f} (4/9 = {4 / 9:.6f})")


if __name__ == "__main__":
    main()
