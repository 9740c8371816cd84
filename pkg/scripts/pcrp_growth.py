"""Cluster-count and powered-sum growth of the powered CRP against theory.

    python3 scripts/pcrp_growth.py --n 10000 --runs 100 --r 0 0.5 1 1.5
"""
import argparse

import numpy as np

from mpdhp.pcrp import PcrpParams, expected_cluster_count, loglog_slope, simulate_pcrp_batch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--r", type=float, nargs="+", default=[0.0, 0.5, 1.0, 1.5])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cps = np.geomspace(100, args.n, 20).astype(int)
    print(f"{'r':>5} {'K slope':>8} {'theory':>8} {'S slope':>8} {'theory':>8} {'K(N)':>8} {'E[K](N)':>8}")
    for r in args.r:
        params = PcrpParams(r, args.alpha)
        _, K, S = simulate_pcrp_batch(args.n, params, args.runs, args.seed, cps)
        expected = [expected_cluster_count(int(n), params) for n in cps]
        print(f"{r:5.2f} {loglog_slope(cps, K.mean(0)):8.3f} {loglog_slope(cps, expected):8.3f} "
              f"{loglog_slope(cps, S.mean(0)):8.3f} {params.growth_exponent:8.3f} "
              f"{K[:, -1].mean():8.2f} {expected[-1]:8.2f}")


if __name__ == "__main__":
    main()
