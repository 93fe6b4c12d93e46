"""Iteration-count and WRMSE comparison of DIAS and GreedyBO on the shipped scenarios.

Runs seeded trials for each scenario and algorithm, prints a mean ± std table
and the pooled WRMSE at two checkpoints, and optionally writes the per-iteration
mean WRMSE curve to CSV.

    python scripts/compare_algorithms.py --trials 10 --curve wrmse.csv
"""
from __future__ import annotations

import argparse
import csv
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from dias import io
from dias.sim import run_batch

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def sweep(n_sources: int, algorithm: str, trials: int, first_seed: int = 0, min_iterations: int = 60, **overrides):
    cfg = io.load_config(SCENARIOS / f"scenario{n_sources}.cfg")
    cfg = replace(cfg, algorithm=algorithm, min_iterations=min_iterations, seed=first_seed, **overrides)
    t0 = time.perf_counter()
    results, agg = run_batch(cfg, trials)
    agg["seconds"] = time.perf_counter() - t0
    agg["wrmse"] = np.array([[r.wrmse_pooled for r in res.records[:min_iterations]] for res in results])
    return agg


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="first trial seed")
    p.add_argument("--scenarios", type=int, nargs="+", default=[3, 5, 7])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--curve", help="write mean pooled WRMSE per iteration to this CSV")
    args = p.parse_args(argv)

    rows = []
    for n in args.scenarios:
        for algo in ("dias", "greedybo"):
            agg = sweep(n, algo, args.trials, args.seed, alpha=args.alpha)
            w = agg["wrmse"]
            rows.append((n, algo, agg))
            print(f"{n} sources {algo:8s} {agg['mean_iterations']:6.1f} ± {agg['std_iterations']:5.1f}"
                  f"  DNF {agg['dnf_count']:2d}  WRMSE@10 {w[:, 9].mean():.4f}  @60 {w[:, 59].mean():.4f}"
                  f"  drop {int(np.sum(w[:, 59] < w[:, 9]))}/{len(w)}  ({agg['seconds']:.0f} s)", flush=True)
    if args.curve:
        with open(args.curve, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["n_sources", "algorithm", "iter", "mean_wrmse", "std_wrmse"])
            for n, algo, agg in rows:
                w = agg["wrmse"]
                for t in range(w.shape[1]):
                    out.writerow([n, algo, t + 1, repr(float(w[:, t].mean())), repr(float(w[:, t].std()))])


if __name__ == "__main__":
    main()
