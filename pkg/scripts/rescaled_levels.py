"""Rescaled significance levels at the equal-sigma worst case.

Prints alpha_tilde for both methods over n and nominal levels. Monte-Carlo
entries that cannot be resolved with the given K are printed as "<1/K".
"""

import argparse

import numpy as np

from rankgauge import Method, MethodSettings, ResolutionExhausted, rescale_alpha


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="*", default=[10, 30, 50, 100])
    p.add_argument("--levels", type=float, nargs="*", default=[0.95, 0.9, 0.8])
    p.add_argument("--replicates", type=int, default=10_000)
    p.add_argument("--zhang-replicates", type=int, default=1_000)
    p.add_argument("--zhang-K", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()

    settings = MethodSettings(K=args.zhang_K)
    print("n\tlevel\ttukey\tzhang")
    for n in args.n:
        for level in args.levels:
            alpha = round(1 - level, 10)
            tk = rescale_alpha(n, np.ones(n), alpha, Method.TUKEY, args.replicates, args.seed, settings=settings)
            try:
                zh = rescale_alpha(n, np.ones(n), alpha, Method.ZHANG, args.zhang_replicates, args.seed, settings=settings)
                z = f"{zh.alpha_tilde:.2g}"
            except ResolutionExhausted:
                z = f"<{1 / args.zhang_K:.0e}"
            print(f"{n}\t{level:g}\t{tk.alpha_tilde:.3f}\t{z}", flush=True)


if __name__ == "__main__":
    main()
