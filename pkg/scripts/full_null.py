"""Simultaneous coverage of the Tukey intervals when all means are equal.

With every mean tied, each true set-rank is [1, n] and the coverage equals
the probability that the studentized range stays below its quantile.
"""

import argparse

import numpy as np

from rankgauge import Method, coverage_at


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--replicates", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args()
    est = coverage_at(np.zeros(args.n), np.ones(args.n), args.alpha, Method.TUKEY, args.replicates, args.seed)
    print(f"coverage {est.p_hat:.5f} (se {est.std_error:.5f}, R={est.R})")


if __name__ == "__main__":
    main()
