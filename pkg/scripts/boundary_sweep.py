"""Empirical detection boundary for one procedure over several dimensions.

Writes the per-point CSV and prints where power crosses 1 - beta, in units of
the procedure's rate scale. Example:

    python3 scripts/boundary_sweep.py --procedure psi1 --n 1000 --d 2 8 32 --out sweep.csv
"""

import argparse
import logging
from pathlib import Path

from mixdetect.simulation import boundary_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--procedure", default="psi1", choices=("psi1", "psi2", "psi3"))
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--d", type=int, nargs="+", default=[2, 8, 32])
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--beta", type=float, default=0.1)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("boundary.csv"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    report = boundary_sweep(args.procedure.upper(), args.n, args.d, args.alpha, args.beta, 1.0,
                            args.reps, args.seed, eps=args.eps)
    args.out.write_text(report.to_csv())
    for c in report.crossings:
        where = "not reached" if c.rho_hat is None else f"rho={c.rho_hat:.4g} ({c.constant:.3g} x scale)"
        print(f"d={c.d:<5d} scale={c.scale:.4g}  crossing {where}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
