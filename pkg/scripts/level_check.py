"""Null rejection rates of all three procedures on a grid of (n, d).

    python3 scripts/level_check.py --n 64 128 256 --d 2 8 --reps 10000
"""

import argparse
import math

from mixdetect.procedures import calibration_for
from mixdetect.report import Procedure
from mixdetect.simulation import GridPoint, rejection_rate


def main():
    ap = argparse.ArgumentParser(description="null rejection rates")
    ap.add_argument("--n", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--d", type=int, nargs="+", default=[2, 8])
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--calib-reps", type=int, default=400_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    band = 3 * math.sqrt(args.alpha * (1 - args.alpha) / args.reps)
    print(f"{'proc':6} {'n':>6} {'d':>4} {'rate':>8}   (alpha + 3 sigma = {args.alpha + band:.4f})")
    for p, proc in enumerate((Procedure.PSI1, Procedure.PSI2, Procedure.PSI3)):
        for n in args.n:
            for d in args.d:
                calib = calibration_for(proc, n, d, args.alpha, args.calib_reps, args.seed)
                rate = rejection_rate(proc, n, args.alpha, GridPoint(0.0, (0.0,) * d), args.reps,
                                      args.seed, (p, n, d), calib)
                print(f"{proc.value:6} {n:6d} {d:4d} {rate:8.4f}")


if __name__ == "__main__":
    main()
