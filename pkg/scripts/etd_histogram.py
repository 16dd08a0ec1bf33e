#!/usr/bin/env python3
"""Distribution of ETD periods over perturbed copies of the reference matrix.

Writes a count table (s, t_E, count) for plotting and prints the share of
recommendations falling in [17, 21].

Usage:
  python3 scripts/etd_histogram.py --n 10000 --sd 0.01 0.02 --out results/etd.csv
"""
import argparse
import csv
import sys

import numpy as np

from inspection_pomdp.presets import BASELINE_MODEL
from inspection_pomdp.simulator import etd_recommendations


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--sd", type=float, nargs="+", default=[0.01, 0.02])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["s", "t_E", "count"])
    for s in args.sd:
        etd = etd_recommendations(BASELINE_MODEL, s, args.n, args.seed)
        values, counts = np.unique(etd, return_counts=True)
        for v, c in zip(values, counts):
            w.writerow([s, int(v), int(c)])
        share = np.mean((etd >= 17) & (etd <= 21))
        print(f"s={s}: {share:.1%} in [17, 21]", file=sys.stderr)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
