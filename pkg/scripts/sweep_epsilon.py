#!/usr/bin/env python3
"""Outer-iteration counts across target accuracies.

Sweeps epsilon over a decade grid for both second-order solvers on a small
saddle chain and two random quadratic fixtures, then reports the fitted
growth exponent of iterations against 1/epsilon.  The theory predicts at
most eps^{-3/2} up to logs; in practice the fitted exponents are far
smaller.
"""
import argparse

import numpy as np

from minimax2 import drivers, problems
from minimax2.drivers import SolverConfig


def fixtures():
    params = problems.SaddleChainParams(n=4, m=2, L=1.0, gamma=1.0)
    yield "saddle_chain(n=4)", problems.saddle_chain_problem(params), np.full(4, 1e-3), {"L2": 16.0}
    for seed, n, m in ((3, 8, 4), (4, 12, 6)):
        prob = problems.random_quadratic(seed, n, m)
        x0 = np.random.default_rng(seed).standard_normal(n)
        yield f"quadratic(seed={seed})", prob, x0, {}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epsilons", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'fixture':>22} {'algorithm':>10} " + " ".join(f"{e:>8.0e}" for e in args.epsilons) + "   exponent")
    for name, prob, x0, extra in fixtures():
        y0 = np.random.default_rng(args.seed).standard_normal(prob.dim_y)
        for algo, runner in (("grtr", drivers.run_grtr), ("lmnegcur", drivers.run_lmnegcur)):
            counts = []
            for eps in args.epsilons:
                cfg = SolverConfig(epsilon=eps, max_outer_iters=500_000, **extra)
                counts.append(max(runner(prob, x0, y0, cfg).iterations, 1))
            slope = np.polyfit(np.log(1.0 / np.asarray(args.epsilons)), np.log(counts), 1)[0]
            print(
                f"{name:>22} {algo:>10} "
                + " ".join(f"{c:>8d}" for c in counts)
                + f"   {slope:8.3f}"
            )


if __name__ == "__main__":
    main()
