#!/usr/bin/env python3
"""Monte-Carlo comparison of inspection rules on the reference facility.

For each d, evaluates the ETD rule, the two optimal rules, fixed periods
24/60/120 and no inspection on common sampled paths, and writes one CSV row
per (d, rule).

Usage:
  python3 scripts/simulate_rules.py --runs 100000 --seed 1 --out results/rules.csv
  python3 scripts/simulate_rules.py --sd 0.01   # perturbed matrix per run
"""
import argparse
import csv
import sys

from inspection_pomdp import hitting_times, optimal_inspection_time
from inspection_pomdp.presets import BASELINE_D_VALUES, BASELINE_MODEL, START_BELIEF, baseline_penalties
from inspection_pomdp.simulator import InspectionRule, SimConfig, run_experiment

FIXED = (24, 60, 120)


def rules_for(d):
    pen = baseline_penalties(d)
    t_v = optimal_inspection_time(BASELINE_MODEL, pen, START_BELIEF).t_star
    t_vc = optimal_inspection_time(BASELINE_MODEL, pen, START_BELIEF, "inspection-outcome").t_star
    rules = [InspectionRule("ETD", hitting_times(BASELINE_MODEL).t_e),
             InspectionRule("optimal", t_v), InspectionRule("optimal-variant", t_vc)]
    rules += [InspectionRule(f"T{t}", t) for t in FIXED]
    return rules + [InspectionRule("never", None)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sd", type=float, default=0.0, help="perturbation standard deviation")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--d", type=float, nargs="+", default=list(BASELINE_D_VALUES))
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args()

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["d", "rule", "time", "caught_fraction", "mean_value_no_ic", "mean_value_ic",
                "end_time_mean", "end_time_median", "end_time_min", "end_time_max"])
    for d in args.d:
        cfg = SimConfig(baseline_penalties(d), rules_for(d), n_runs=args.runs, seed=args.seed,
                        perturbation_sd=args.sd, workers=args.workers)
        rep = run_experiment(cfg, BASELINE_MODEL)
        et = rep.end_times
        for r in rep.rules:
            w.writerow([d, r.name, r.time, r.caught_fraction, r.mean_value_no_ic, r.mean_value_ic,
                        et.mean, et.median, et.min, et.max])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
