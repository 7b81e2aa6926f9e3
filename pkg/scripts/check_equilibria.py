"""Solve the equilibrium problems from random starts and report worst errors."""

import argparse
import time

import numpy as np

from syndicate.equilibrium import (
    AsymptoticConfig,
    asymptotic_best_response,
    equiprobable_optimality_check,
    minimize_return_over_crowd,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    start = time.perf_counter()
    worst = 0.0
    for t in (2, 5, 10):
        for c in (2, 10, 100):
            rep = minimize_return_over_crowd(t, c, t, start=rng.dirichlet(np.ones(t)))
            worst = max(worst, np.abs(rep.argmin_vector - 1 / t).max())
            if not (rep.converged and rep.certified):
                print(f"crowd minimizer failed at t={t} c={c}")
    print(f"crowd minimizer: worst distance to uniform {worst:.2e}")

    worst, iters = 0.0, 0
    for _ in range(args.trials):
        t = int(rng.integers(2, 11))
        p = rng.dirichlet(np.ones(t)) * 0.95 + 0.05 / t
        p /= p.sum()
        cfg = AsymptoticConfig(float(rng.uniform(0.2, 5)))
        for side in ("crowd", "syndicate"):
            rep = asymptotic_best_response(p, cfg, side=side)
            worst = max(worst, np.abs(rep.argmin_vector - p).max())
            iters = max(iters, rep.iterations)
    print(f"best responses: worst distance to p {worst:.2e}, max iterations {iters}")

    for t, c, s in [(2, 2, 2), (3, 5, 3), (2, 5, 2), (5, 10, 5)]:
        rep = equiprobable_optimality_check(t, c, s, sample_count=200, seed=args.seed)
        print(f"uniform lottery best for t={t} c={c} s={s}: {rep.baseline_is_max} "
              f"(uniform {rep.baseline_gain:.4f}, best sample {rep.max_sample_gain:.4f})")
    print(f"elapsed {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
