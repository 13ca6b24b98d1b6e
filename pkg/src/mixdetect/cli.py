"""Command-line front end.

Exit codes for ``test``: 0 = H0 not rejected, 1 = H0 rejected, 2 = bad input,
3 = calibration missing or inconsistent with the sample. Other subcommands
exit 0 on success and 2/3 on the same error classes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import warnings
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .bounds import lr_second_moment_l2, lr_second_moment_linf, rates
from .errors import CalibrationError, MixDetectError
from .orderstats import OrderStatCalibration, calibrate_alpha_n
from .procedures import Procedure, Sample, calibration_for, psi3_level, run_test, split_sizes
from .report import _jsonable, repr_17
from .sample_io import read_sample_csv
from .simulation import ExperimentSpec, boundary_sweep, estimate_errors

log = logging.getLogger("mixdetect")

EXIT_ACCEPT, EXIT_REJECT, EXIT_INPUT, EXIT_CALIBRATION = 0, 1, 2, 3
MOMENT_MULTIPLIERS = (0.5, 0.99, 2.0)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _procedure(name: str) -> Procedure:
    return Procedure(name.upper())


def cmd_test(args: argparse.Namespace) -> int:
    path = Path(args.sample)
    if not path.is_file():
        raise CliError(f"{path}: no such file")
    raw = path.read_bytes()
    data, _ = read_sample_csv(path)
    x = Sample(data)
    proc = _procedure(args.procedure)
    calib = None
    if proc is not Procedure.PSI1:
        if args.calibration:
            if not Path(args.calibration).is_file():
                raise CliError(f"{args.calibration}: no such calibration file", EXIT_CALIBRATION)
            calib = OrderStatCalibration.load(args.calibration)
        elif args.auto_calibrate:
            calib = calibration_for(proc, x.n, x.d, args.alpha, args.reps, args.seed)
        else:
            raise CliError(f"{proc.value} needs --calibration PATH or --auto-calibrate", EXIT_CALIBRATION)
    report = run_test(proc, x, args.alpha, calib)
    report.metadata.update(tool_version=__version__, input_sha256=_sha256(raw))
    _emit(report.to_json(indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_REJECT if report.reject else EXIT_ACCEPT


def cmd_calibrate(args: argparse.Namespace) -> int:
    n, level = args.n, args.alpha
    if args.procedure:
        proc = _procedure(args.procedure)
        if proc is Procedure.PSI2:
            n = split_sizes(args.n)[1]
        elif proc is Procedure.PSI3:
            if args.d is None:
                raise CliError("--procedure psi3 needs --d")
            level = psi3_level(args.alpha, args.d)
    if n < 2:
        raise CliError(f"calibration needs n >= 2, got {n}")
    calib = calibrate_alpha_n(n, level, args.reps, args.seed)
    _emit(calib.dumps(), args.output)
    return 0


def _rates_rows(ns: Sequence[int], ds: Sequence[int], alpha: float, beta: float, M: float) -> list[dict]:
    rows = []
    for n in ns:
        for d in ds:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                r = rates(n, d, alpha, beta, M)
            row: dict[str, Any] = {"n": n, "d": d, "rho_sharp": r.rho_sharp, "rho_star": r.rho_star,
                                   "rho_dagger": r.rho_dagger}
            # second moments of the least-favourable priors with r = M and eps = c * rho / M
            for c in MOMENT_MULTIPLIERS:
                eps2 = c * r.rho_sharp / M
                epsi = c * r.rho_star / M
                row[f"m2_l2_{c:g}"] = lr_second_moment_l2(n, d, eps2, M) if eps2 <= 1 else math.nan
                row[f"m2_linf_{c:g}"] = lr_second_moment_linf(n, d, epsi, M) if epsi <= 1 else math.nan
            rows.append(row)
    return rows


def _rows_csv(rows: list[dict], provenance: dict[str, Any]) -> str:
    buf = io.StringIO()
    for key in sorted(provenance):
        buf.write(f"# {key}={provenance[key]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    cols = list(rows[0])
    writer.writerow(cols)
    for row in rows:
        writer.writerow([v if isinstance(v, int) else repr_17(v) for v in (row[c] for c in cols)])
    return buf.getvalue()


def _theory_table(ns, ds, alpha, beta, M, fmt, output, digest) -> int:
    if not ns or not ds:
        raise CliError("grid needs non-empty n and d lists")
    rows = _rates_rows(ns, ds, alpha, beta, M)
    prov = {"tool_version": __version__, "input_sha256": digest, "alpha": alpha, "beta": beta, "M": M}
    if fmt == "json":
        _emit(_dump_json({"provenance": prov, "rows": rows}), output)
    else:
        _emit(_rows_csv(rows, prov), output)
    return 0


def cmd_rates(args: argparse.Namespace) -> int:
    if args.n is None or args.d is None:
        raise CliError("rates needs --n and --d")
    digest = _sha256(json.dumps([args.n, args.d, args.alpha, args.beta, args.big_m]).encode())
    return _theory_table([args.n], [args.d], args.alpha, args.beta, args.big_m, args.format, args.output, digest)


def cmd_simulate(args: argparse.Namespace) -> int:
    raw = Path(args.spec).read_bytes()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.spec}: invalid JSON ({exc})") from exc
    spec = ExperimentSpec.from_dict(doc)
    calib = None
    if args.calibration:
        calib = OrderStatCalibration.load(args.calibration)
    report = estimate_errors(spec, calib, auto_calibrate=args.auto_calibrate)
    report.provenance["input_sha256"] = _sha256(raw)
    if not spec.level_resolution_ok():
        log.warning("reps * alpha < 100: type-I estimates are poorly resolved")
    if args.format == "json":
        _emit(_dump_json(report.summary()), args.output)
    else:
        _emit(report.to_csv(), args.output)
    return 0


def cmd_boundary(args: argparse.Namespace) -> int:
    if args.grid:
        raw = Path(args.grid).read_bytes()
        try:
            g = json.loads(raw)
            ns, ds = list(g["n"]), list(g["d"])
            alpha, beta, M = float(g["alpha"]), float(g["beta"]), float(g["M"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CliError(f"{args.grid}: invalid grid spec ({exc})") from exc
        return _theory_table(ns, ds, alpha, beta, M, args.format, args.output, _sha256(raw))
    if not args.d_list:
        raise CliError("boundary sweep needs a non-empty --d list (or a grid JSON file)")
    if args.n is None:
        raise CliError("boundary sweep needs --n")
    report = boundary_sweep(_procedure(args.procedure), args.n, args.d_list, args.alpha, args.beta,
                            args.big_m, args.reps, args.seed, eps=args.eps, calib_reps=args.calib_reps)
    if args.format == "json":
        _emit(_dump_json(report.summary()), args.output)
    else:
        _emit(report.to_csv(), args.output)
    return 0


def _positive_int_list(text: str) -> list[int]:
    if not text.strip():
        return []
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixdetect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress logs on stderr")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--reps", type=int, default=200_000)
    common.add_argument("--output", metavar="PATH")
    common.add_argument("--format", choices=("json", "csv"), default="csv")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", parents=[common], help="run a detection test on a CSV sample")
    p.add_argument("sample", help="CSV file, one observation per row")
    p.add_argument("--procedure", choices=("psi1", "psi2", "psi3"), required=True)
    p.add_argument("--calibration", metavar="PATH")
    p.add_argument("--auto-calibrate", action="store_true",
                   help="calibrate on the fly with --reps/--seed when no file is given")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("calibrate", parents=[common], help="calibrate the order-statistic test")
    p.add_argument("--n", type=int, required=True, help="sample size (full sample size with --procedure)")
    p.add_argument("--procedure", choices=("psi2", "psi3"),
                   help="derive the calibrated size/level for this procedure")
    p.add_argument("--d", type=int, help="dimension, needed with --procedure psi3")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("rates", parents=[common], help="theoretical radii for one (n, d)")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--big-m", type=float, default=1.0)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("simulate", parents=[common], help="estimate rejection rates for an experiment spec")
    p.add_argument("spec", help="ExperimentSpec JSON file")
    p.add_argument("--calibration", metavar="PATH")
    p.add_argument("--auto-calibrate", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("boundary", parents=[common],
                       help="theoretical table from a grid JSON, or an empirical power sweep")
    p.add_argument("grid", nargs="?", help="JSON {n: [...], d: [...], alpha, beta, M}")
    p.add_argument("--procedure", choices=("psi1", "psi2", "psi3"), default="psi1")
    p.add_argument("--n", type=int)
    p.add_argument("--d", dest="d_list", type=_positive_int_list, default=None,
                   help="comma-separated dimensions for the sweep")
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--big-m", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--calib-reps", type=int, default=200_000)
    p.set_defaults(func=cmd_boundary, reps=2000)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"mixdetect: error: {exc}", file=sys.stderr)
        return exc.code
    except CalibrationError as exc:
        print(f"mixdetect: calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (MixDetectError, OSError) as exc:
        print(f"mixdetect: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
