"""How often the pooled WRMSE drops between two checkpoints, over many seeds.

Prints the per-trial drop rate for each scenario and the implied chance that
a 10-trial batch shows at least 9 drops (binomial, trials independent).

    python scripts/wrmse_seed_study.py --first-seed 100 --trials 30
"""
from __future__ import annotations

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.stats import binom

from dias import io
from dias.sim import run_batch

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--first-seed", type=int, default=100)
    p.add_argument("--scenarios", type=int, nargs="+", default=[3, 5, 7])
    p.add_argument("--algo", default="dias")
    p.add_argument("--early", type=int, default=10)
    p.add_argument("--late", type=int, default=60)
    args = p.parse_args(argv)

    for n in args.scenarios:
        cfg = replace(io.load_config(SCENARIOS / f"scenario{n}.cfg"), algorithm=args.algo,
                      min_iterations=args.late, seed=args.first_seed)
        results, agg = run_batch(cfg, args.trials)
        w = np.array([[r.wrmse_pooled for r in res.records[:args.late]] for res in results])
        drop = w[:, args.late - 1] < w[:, args.early - 1]
        rate = drop.mean()
        print(f"{n} sources {args.algo}: drop rate {rate:.2f} ({drop.sum()}/{len(drop)}), "
              f"mean WRMSE@{args.early} {w[:, args.early - 1].mean():.4f} @{args.late} {w[:, args.late - 1].mean():.4f}, "
              f"P(>=9 of 10) {binom.sf(8, 10, rate):.2f}, mean iterations {agg['mean_iterations']:.1f}", flush=True)


if __name__ == "__main__":
    main()
