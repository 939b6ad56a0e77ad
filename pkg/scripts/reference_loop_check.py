"""Independent check of the Monte-Carlo method's coverage on random centres.

Re-implements the method as a direct loop (full rank matrix, numpy type-3
quantiles, bisection that keeps iterating until both the precision and the
iteration budget are exhausted) without using rankgauge, and prints the
coverage and mean normalised width over random centres. Compare with the
``zhang`` rows of ``configs/table2.cfg``.
"""

import argparse

import numpy as np
from scipy.stats import rankdata


def loop_intervals(y, sigma, alpha, K, g, precision=1e-6, maxiter=50):
    n = len(y)
    x = sigma[:, None] * g.standard_normal((n, K)) + y[:, None]
    r = rankdata(x, axis=0)

    def pointwise(beta):
        lo = np.quantile(r, beta / 2, axis=1, method="closest_observation")
        hi = np.quantile(r, 1 - beta / 2, axis=1, method="closest_observation")
        return lo, hi

    beta1, beta2 = 0.0, alpha
    beta = alpha / 2
    counter = 0
    cov = K
    while abs(beta1 - beta2) > precision or counter <= maxiter:
        lo, hi = pointwise(beta)
        cov = np.all((r >= lo[:, None]) & (r <= hi[:, None]), axis=0).sum()
        if cov / K >= 1 - alpha:
            beta1 = beta
        else:
            beta2 = beta
        beta = (beta1 + beta2) / 2
        counter += 1
    if cov / K < 1 - alpha:
        beta = beta1
    return pointwise(beta)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--K", type=int, default=10_000)
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args()
    g = np.random.default_rng(args.seed)
    n = args.n
    hits, widths = 0, []
    for _ in range(args.draws):
        mu = args.tau * g.normal(size=n)
        y = mu + g.normal(size=n)
        lo, hi = loop_intervals(y, np.ones(n), args.alpha, args.K, g)
        truth = rankdata(mu)
        hits += bool(np.all((lo <= truth) & (hi >= truth)))
        widths.append(np.sum(hi - lo) / (n * (n - 1)))
    cov = hits / args.draws
    se = np.sqrt(cov * (1 - cov) / args.draws)
    print(f"coverage {cov:.3f} (se {se:.3f}), efficiency {np.mean(widths):.3f}")


if __name__ == "__main__":
    main()
