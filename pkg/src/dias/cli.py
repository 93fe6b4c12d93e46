"""Command-line entry point: ``dias run | sweep | report``."""
from __future__ import annotations

import argparse
import logging
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .sim import ALGORITHMS, aggregate, run, trial_iterations


def _override(cfg, args):
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "algo", None):
        changes["algorithm"] = args.algo
    if getattr(args, "max_iterations", None) is not None:
        changes["max_iterations"] = args.max_iterations
    if getattr(args, "min_iterations", None) is not None:
        changes["min_iterations"] = args.min_iterations
    return replace(cfg, **changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _override(io.load_config(args.config), args)
    out = Path(args.out) if args.out else io.default_out_root() / f"{Path(args.config).stem}_{cfg.algorithm}_seed{cfg.seed}"
    result = run(cfg)
    io.export_run(result, out)
    s = result.summary
    found = s["iterations_to_all_found"]
    print(f"{cfg.algorithm} seed={cfg.seed}: {'all sources found at iteration ' + str(found) if found else 'DNF'}"
          f" ({s['found_total']}/{s['n_sources']}) -> {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _override(io.load_config(args.config), args)
    out = Path(args.out) if args.out else io.default_out_root() / f"{Path(args.config).stem}_{cfg.algorithm}_sweep"
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    for k in range(args.trials):
        result = run(replace(cfg, seed=cfg.seed + k))
        io.export_run(result, out / f"trial_{k:03d}")
        summaries.append(result.summary)
        n = result.summary["iterations_to_all_found"]
        print(f"trial {k} seed={cfg.seed + k}: {n if n else 'DNF'}", flush=True)
    agg = aggregate(summaries, cfg.max_iterations)
    agg.update(algorithm=cfg.algorithm, n_sources=summaries[0]["n_sources"], max_iterations=cfg.max_iterations,
               config=Path(args.config).name)
    io.write_aggregate(agg, out)
    print(f"{cfg.algorithm}: {agg['mean_iterations']:.1f} ± {agg['std_iterations']:.1f} "
          f"(DNF {agg['dnf_count']}/{agg['n_trials']}) -> {out}")
    return 0


def build_report(dirs):
    """Recompute per-sweep aggregates from trial summaries; returns (rows, curves)."""
    rows, curves = [], {}
    for d in dirs:
        agg, metas, trials = io.load_sweep(d)
        if not metas:
            raise ValueError(f"{d}: no trial runs found")
        cap = metas[0]["config"]["max_iterations"]
        recomputed = aggregate([m["summary"] for m in metas], cap)
        for key in ("mean_iterations", "std_iterations", "dnf_count", "n_trials"):
            if recomputed[key] != agg[key]:
                raise ValueError(f"{d}: aggregate.json {key}={agg[key]} disagrees with trials ({recomputed[key]})")
        algo = metas[0]["summary"]["algorithm"]
        n_src = metas[0]["summary"]["n_sources"]
        rows.append({"dir": str(d), "algorithm": algo, "n_sources": n_src, **recomputed})
        per_iter = defaultdict(list)
        for t in trials:
            for it, w in io.read_wrmse_curve(t):
                per_iter[it].append(w)
        curves[(algo, n_src, str(d))] = per_iter
    return rows, curves


def format_table(rows) -> str:
    by_scn = defaultdict(dict)
    for r in rows:
        by_scn[r["n_sources"]][r["algorithm"]] = r
    algos = sorted({r["algorithm"] for r in rows})
    scns = sorted(by_scn)
    head = "Algorithm".ljust(12) + "".join(f"{n} sources".rjust(22) for n in scns)
    lines = ["Iterations to find all sources (mean ± std; * = lowest mean, DNFs counted at cap)", head]
    for a in algos:
        cells = []
        for n in scns:
            r = by_scn[n].get(a)
            if r is None:
                cells.append("-".rjust(22))
                continue
            best = min(x["mean_iterations"] for x in by_scn[n].values())
            mark = "*" if r["mean_iterations"] == best and len(by_scn[n]) > 1 else " "
            dnf = f" [{r['dnf_count']} DNF]" if r["dnf_count"] else ""
            cells.append(f"{mark}{r['mean_iterations']:.1f}±{r['std_iterations']:.1f}{dnf}".rjust(22))
        lines.append(a.ljust(12) + "".join(cells))
    return "\n".join(lines)


def cmd_report(args) -> int:
    rows, curves = build_report(args.dirs)
    table = format_table(rows)
    print(table)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(table + "\n")
    with open(out / "wrmse_curve.csv", "w") as fh:
        fh.write("algorithm,n_sources,sweep,iter,mean_wrmse,std_wrmse,n_trials\n")
        for (algo, n_src, d), per_iter in curves.items():
            for it in sorted(per_iter):
                v = np.array(per_iter[it])
                fh.write(f"{algo},{n_src},{d},{it},{v.mean()!r},{v.std()!r},{len(v)}\n")
    print(f"wrote {out / 'report.txt'} and {out / 'wrmse_curve.csv'}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dias", description="Multi-robot source-seeking simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one simulation and export its records")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--algo", choices=ALGORITHMS)
    r.add_argument("--max-iterations", type=int)
    r.add_argument("--min-iterations", type=int)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run seeded trials and aggregate iteration counts")
    s.add_argument("config")
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--algo", choices=ALGORITHMS)
    s.add_argument("--seed", type=int, help="first trial seed (default: config seed)")
    s.add_argument("--out")
    s.add_argument("--max-iterations", type=int)
    s.add_argument("--min-iterations", type=int)
    s.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="compare sweeps and export the WRMSE curve")
    rep.add_argument("dirs", nargs="+")
    rep.add_argument("--out", default=".")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be >= 1")
    try:
        return args.func(args)
    except io.ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
