#!/usr/bin/env python3
"""Median evaluations as the node budget varies, with and without drift."""

import argparse
from pathlib import Path

from neutraldrift.bench_cli import ExperimentPlan, run_experiment, write_csv
from neutraldrift.stats import median_iqr


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default="2-Add")
    ap.add_argument("--rulesets", default="none,dmn")
    ap.add_argument("--nodes", default="50,100,150")
    ap.add_argument("--runs", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/size_sweep.csv"))
    args = ap.parse_args()

    nodes = [int(n) for n in args.nodes.split(",")]
    plan = ExperimentPlan([args.problem], args.rulesets.split(","), runs=args.runs,
                          nodes=nodes, base_seed=args.seed)
    rows, _ = run_experiment(plan, workers=args.workers)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        write_csv(rows, fh)

    print(f"{'ruleset':>8} {'nodes':>6} {'median':>10} {'IQR':>10} {'size':>6}")
    for ruleset in plan.rulesets:
        for n in nodes:
            cell = [r for r in rows if r.ruleset == ruleset and r.nodes == n]
            s = median_iqr([r.evaluations for r in cell])
            size = sum(r.mean_active_size for r in cell) / len(cell)
            print(f"{ruleset:>8} {n:>6} {s.median:>10,.0f} {s.iqr:>10,.0f} {size:>6.1f}")


if __name__ == "__main__":
    main()
