"""Compare seeded Monte Carlo with the exact engine on random small configurations."""

import argparse

import numpy as np

from syndicate.exact import expected_win_exact
from syndicate.model import CrowdStrategy, LotteryConfig, SyndicateStrategy
from syndicate.simulator import simulate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--configs", type=int, default=20)
    ap.add_argument("--trials", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    hits = 0
    for i in range(args.configs):
        t = int(rng.integers(2, 4))
        c = int(rng.integers(1, 5))
        p = rng.dirichlet(np.ones(t)) * 0.9 + 0.1 / t
        q = rng.dirichlet(np.ones(t))
        cfg = LotteryConfig(t, p / p.sum())
        syn = SyndicateStrategy.from_stakes(rng.uniform(0, 2, t))
        crowd = CrowdStrategy(c, q / q.sum())
        exact = expected_win_exact(cfg, syn, crowd).expected_return
        res = simulate(cfg, syn, crowd, args.trials, seed=args.seed * 1000 + i, workers=args.workers)
        z = (res.mean_syndicate_return - exact) / res.std_error
        hits += abs(z) <= 4
        print(f"t={t} c={c} exact={exact:+.6f} mc={res.mean_syndicate_return:+.6f} z={z:+.2f}")
    print(f"{hits}/{args.configs} within 4 standard errors")


if __name__ == "__main__":
    main()
