"""Rewrite the golden calibration file used by the CLI regression test.

Only run this after an intentional change to the calibration algorithm or
its output format, and review the diff.
"""

from pathlib import Path

from mixdetect.cli import main

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden" / "calib_n64_alpha0.05_seed42.json"

if __name__ == "__main__":
    raise SystemExit(main(["calibrate", "--n", "64", "--alpha", "0.05", "--seed", "42",
                           "--reps", "200000", "--output", str(GOLDEN)]))
