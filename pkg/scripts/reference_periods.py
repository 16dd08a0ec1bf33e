#!/usr/bin/env python3
"""Optimal inspection periods on the reference facility for each d.

Usage:
  python3 scripts/reference_periods.py [--c 5] [--c-tilde 1] [--d 14 18 22 26 30]
"""
import argparse
import time

from inspection_pomdp import PenaltyParams, hitting_times, optimal_inspection_time
from inspection_pomdp.presets import BASELINE_C, BASELINE_C_TILDE, BASELINE_D_VALUES, BASELINE_MODEL, START_BELIEF


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=float, default=BASELINE_C)
    ap.add_argument("--c-tilde", type=float, default=BASELINE_C_TILDE)
    ap.add_argument("--d", type=float, nargs="+", default=list(BASELINE_D_VALUES))
    args = ap.parse_args()

    start = time.perf_counter()
    t_e = hitting_times(BASELINE_MODEL).t_e
    print(f"{'d':>6} {'t_V':>5} {'t_VC':>5} {'t_E':>5}")
    for d in args.d:
        pen = PenaltyParams(d, args.c, args.c_tilde)
        row = []
        for variant in ("base", "inspection-outcome"):
            dec = optimal_inspection_time(BASELINE_MODEL, pen, START_BELIEF, variant)
            row.append("never" if dec.never else str(dec.t_star))
        print(f"{d:>6g} {row[0]:>5} {row[1]:>5} {t_e:>5}")
    print(f"({time.perf_counter() - start:.3f}s)")


if __name__ == "__main__":
    main()
