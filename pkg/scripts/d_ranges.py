#!/usr/bin/env python3
"""Range of d over which each target period is optimal, at fixed c.

Prints the analytic interval from the two half-planes next to the interval
found by re-running the planner on a d grid; the CSV is step-plot ready.

Usage:
  python3 scripts/d_ranges.py --c 5 --t 8 12 15 27 --out results/d_ranges.csv
"""
import argparse
import csv
import sys

from inspection_pomdp.presets import BASELINE_MODEL, START_BELIEF
from inspection_pomdp.sensitivity import d_grid, d_range_sweep, target_time_region


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=float, default=5.0)
    ap.add_argument("--t", type=int, nargs="+", default=[8, 12, 15, 27])
    ap.add_argument("--d-min", type=float, default=5.0)
    ap.add_argument("--d-max", type=float, default=40.0)
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    grid = d_grid(args.d_min, args.d_max, args.step)
    sweep = d_range_sweep(BASELINE_MODEL, args.c, args.t, grid, workers=args.workers)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["t", "d_L", "d_U", "region_d_L", "region_d_U"])
    for r in sweep:
        lo, hi = target_time_region(BASELINE_MODEL, START_BELIEF, r.t).d_interval(args.c)
        w.writerow([r.t, "" if r.empty else r.d_lo, "" if r.empty else r.d_hi, lo, hi])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
