"""Seeded Monte-Carlo estimation of rejection rates and detection boundaries.

Randomness is keyed, never sequential: replicate block ``b`` of grid point
``g`` always draws from ``stream(seed, *prefix, g, b)``. Blocks are sized
from ``(n, d)`` alone, so results are bit-identical whatever the number of
worker threads.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bounds import rates
from .errors import CalibrationError, ConfigurationError, DomainError, MissingCalibrationError
from .orderstats import OrderStatCalibration
from .procedures import Procedure, Sample, calibration_for, decide_batch, psi3_level, split_sizes
from .report import repr_17
from .rng import ordered_map, stream

log = logging.getLogger(__name__)

BLOCK_DRAWS = 1 << 21
PRIORS = ("fixed", "corner", "axis")
SWEEP_MULTIPLIERS = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
CSV_HEADER = ("n", "d", "eps", "mu_norm", "rho", "rate", "stderr", "rho_sharp", "rho_star")
# below this n*eps the projected test is outside the regime its guarantee covers
MIN_N_EPS = 16


@dataclass(frozen=True)
class MixtureParams:
    """Contamination ``(1 - eps) N(0, I) + eps N(mu, I)``.

    ``M`` is optional; when given, ``in_l2_class`` / ``in_linf_class`` record
    whether ``mu`` respects the corresponding norm bound.
    """

    eps: float
    mu: tuple[float, ...]
    M: float | None = None

    def __post_init__(self) -> None:
        mu = tuple(float(v) for v in np.atleast_1d(self.mu))
        object.__setattr__(self, "mu", mu)
        if not 0.0 <= self.eps <= 1.0:
            raise DomainError(f"eps must lie in [0, 1], got {self.eps}")
        if not mu or not all(math.isfinite(v) for v in mu):
            raise DomainError("mu must be a non-empty finite vector")

    @property
    def d(self) -> int:
        return len(self.mu)

    @property
    def in_l2_class(self) -> bool | None:
        return None if self.M is None else float(np.linalg.norm(self.mu)) <= self.M

    @property
    def in_linf_class(self) -> bool | None:
        return None if self.M is None else max(abs(v) for v in self.mu) <= self.M


def sample_mixture(params: MixtureParams, n: int, rng: np.random.Generator) -> Sample:
    """n rows of ``V_i mu + noise_i`` with ``V_i ~ Bernoulli(eps)``."""
    return Sample(sample_mixture_batch(params, n, 1, rng)[0])


def sample_mixture_batch(params: MixtureParams, n: int, reps: int, rng: np.random.Generator,
                         prior: str = "fixed") -> np.ndarray:
    """``reps`` independent samples stacked as ``(reps, n, d)``.

    With ``prior="corner"`` each replicate draws its own shift
    ``(|mu| / sqrt(d)) * omega`` with ``omega`` uniform on ``{-1, 1}^d``; with
    ``prior="axis"`` it draws ``max|mu_j| * e_J`` with ``J`` uniform.
    """
    d = params.d
    noise = rng.standard_normal((reps, n, d))
    if params.eps == 0.0 or not any(params.mu):
        return noise
    hit = rng.random((reps, n)) < params.eps
    if prior == "fixed":
        shift = np.broadcast_to(np.asarray(params.mu), (reps, d))
    elif prior == "corner":
        r = float(np.linalg.norm(params.mu))
        shift = (r / math.sqrt(d)) * rng.choice(np.array([-1.0, 1.0]), size=(reps, d))
    elif prior == "axis":
        r = max(abs(v) for v in params.mu)
        shift = np.zeros((reps, d))
        shift[np.arange(reps), rng.integers(0, d, size=reps)] = r
    else:
        raise DomainError(f"unknown prior {prior!r}; expected one of {PRIORS}")
    noise += hit[..., None] * shift[:, None, :]
    return noise


@dataclass(frozen=True)
class GridPoint:
    eps: float
    mu: tuple[float, ...]
    prior: str = "fixed"
    label: float | None = None  # sweep multiplier, when the point comes from a sweep

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", tuple(float(v) for v in self.mu))
        if self.prior not in PRIORS:
            raise DomainError(f"unknown prior {self.prior!r}; expected one of {PRIORS}")


@dataclass(frozen=True)
class ExperimentSpec:
    test: Procedure
    n: int
    d: int
    alpha: float
    grid: tuple[GridPoint, ...]
    reps: int
    seed: int
    beta: float = 0.1
    M: float = 1.0
    calib_ref: str | None = None
    calib_reps: int = 200_000
    calib_seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "test", Procedure(self.test))
        object.__setattr__(self, "grid", tuple(
            g if isinstance(g, GridPoint) else GridPoint(**g) for g in self.grid))
        if self.test not in (Procedure.PSI1, Procedure.PSI2, Procedure.PSI3):
            raise ConfigurationError(f"experiments run PSI1, PSI2 or PSI3, not {self.test.value}")
        if not self.grid:
            raise ConfigurationError("experiment grid is empty")
        if self.reps < 1:
            raise ConfigurationError(f"reps must be positive, got {self.reps}")
        for g in self.grid:
            if len(g.mu) != self.d:
                raise ConfigurationError(f"grid point mu has dimension {len(g.mu)}, expected d={self.d}")

    @property
    def needs_calibration(self) -> bool:
        return self.test is not Procedure.PSI1

    def level_resolution_ok(self) -> bool:
        return self.reps * self.alpha >= 100

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["test"] = self.test.value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentSpec":
        data = dict(data)
        try:
            data["grid"] = tuple(GridPoint(**g) for g in data["grid"])
            return cls(**data)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"invalid experiment spec: {exc}") from exc

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class BoundaryRow:
    n: int
    d: int
    eps: float
    mu_norm: float
    rho: float
    rate: float
    stderr: float
    rho_sharp: float
    rho_star: float
    multiplier: float | None = None
    in_class: bool = True
    n_eps_ok: bool = True

    def csv_fields(self) -> list[str]:
        return [str(self.n), str(self.d)] + [
            repr_17(getattr(self, name)) for name in CSV_HEADER[2:]
        ]


@dataclass
class Crossing:
    d: int
    scale: float
    rho_hat: float | None
    bracket: tuple[float, float] | None
    constant: float | None


@dataclass
class BoundaryReport:
    rows: list[BoundaryRow]
    crossings: list[Crossing] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.provenance):
            buf.write(f"# {key}={self.provenance[key]}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buf.getvalue()

    def summary(self) -> dict[str, Any]:
        return {
            "provenance": self.provenance,
            "crossings": [asdict(c) for c in self.crossings],
            "rows": [asdict(r) for r in self.rows],
        }

    @staticmethod
    def read_csv(text: str) -> list[dict[str, float]]:
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        return [{k: float(v) for k, v in rec.items()} for rec in csv.DictReader(lines)]


def _block_size(n: int, d: int) -> int:
    return max(1, BLOCK_DRAWS // (n * d))


def rejection_rate(test: Procedure, n: int, alpha: float, point: GridPoint, reps: int,
                   seed: int, key: Sequence[int], calib: OrderStatCalibration | None,
                   workers: int | None = None) -> float:
    params = MixtureParams(point.eps, point.mu)
    per_block = _block_size(n, params.d)
    n_blocks = -(-reps // per_block)

    def one(b: int) -> int:
        rows = min(per_block, reps - b * per_block)
        xs = sample_mixture_batch(params, n, rows, stream(seed, *key, b), point.prior)
        return int(np.count_nonzero(decide_batch(test, xs, alpha, calib)))

    return sum(ordered_map(one, range(n_blocks), workers)) / reps


def _point_norm(test: Procedure, mu: Sequence[float]) -> float:
    mu = np.asarray(mu)
    return float(np.max(np.abs(mu))) if test is Procedure.PSI3 else float(np.linalg.norm(mu))


def resolve_calibration(spec: ExperimentSpec, calib: OrderStatCalibration | None = None,
                        auto: bool = False, workers: int | None = None) -> OrderStatCalibration | None:
    if not spec.needs_calibration:
        return None
    if calib is None and spec.calib_ref:
        path = Path(spec.calib_ref)
        if not path.exists():
            raise MissingCalibrationError(f"calibration file {path} does not exist")
        calib = OrderStatCalibration.load(path)
    if calib is None:
        if not auto:
            raise MissingCalibrationError(f"{spec.test.value} needs a calibration (calib_ref) or auto calibration")
        seed = spec.seed if spec.calib_seed is None else spec.calib_seed
        calib = calibration_for(spec.test, spec.n, spec.d, spec.alpha, spec.calib_reps, seed, workers)
    return calib


def estimate_errors(spec: ExperimentSpec, calib: OrderStatCalibration | None = None,
                    auto_calibrate: bool = False, key_prefix: Sequence[int] = (),
                    workers: int | None = None) -> BoundaryReport:
    """Rejection rate with its binomial standard error at every grid point.

    At points with ``eps * |mu| = 0`` the rate estimates the type-I error,
    elsewhere the power (one minus the type-II error).
    """
    calib = resolve_calibration(spec, calib, auto_calibrate, workers)
    if spec.test is Procedure.PSI2 and calib.n != split_sizes(spec.n)[1]:
        raise CalibrationError(f"calibration n={calib.n} does not fit PSI2 on n={spec.n}")
    if spec.test is Procedure.PSI3 and (calib.n != spec.n or
                                         not math.isclose(calib.alpha, psi3_level(spec.alpha, spec.d))):
        raise CalibrationError("calibration does not fit PSI3 at this (n, d, alpha)")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        radii = rates(spec.n, spec.d, spec.alpha, spec.beta, spec.M)
    rows = []
    for g, point in enumerate(spec.grid):
        rate = rejection_rate(spec.test, spec.n, spec.alpha, point, spec.reps, spec.seed,
                              (*key_prefix, g), calib, workers)
        norm = _point_norm(spec.test, point.mu)
        rows.append(BoundaryRow(
            n=spec.n, d=spec.d, eps=point.eps, mu_norm=norm, rho=point.eps * norm, rate=rate,
            stderr=math.sqrt(rate * (1.0 - rate) / spec.reps),
            rho_sharp=radii.rho_sharp, rho_star=radii.rho_star, multiplier=point.label,
            in_class=norm <= spec.M,
            n_eps_ok=spec.n * point.eps >= MIN_N_EPS,
        ))
        log.info("%s n=%d d=%d eps=%.4g |mu|=%.4g: rate=%.4f", spec.test.value, spec.n, spec.d,
                 point.eps, norm, rate)
    prov = {"tool_version": __version__, "seed": spec.seed, "reps": spec.reps,
            "input_sha256": spec.digest()}
    if calib is not None:
        prov.update(calib_seed=calib.seed, calib_reps=calib.mc_reps, alpha_n=repr_17(calib.alpha_n))
    return BoundaryReport(rows, provenance=prov)


def rate_scale(test: Procedure, n: int, d: int) -> float:
    """Reference radius: d^(1/4)/sqrt(n) for the l2 tests, sqrt(ln d / n) for PSI3."""
    if Procedure(test) is Procedure.PSI3:
        return math.sqrt(math.log(d) / n)
    return d ** 0.25 / math.sqrt(n)


def sweep_direction(test: Procedure, d: int) -> np.ndarray:
    if Procedure(test) is Procedure.PSI3:
        e = np.zeros(d)
        e[0] = 1.0
        return e
    return np.full(d, 1.0 / math.sqrt(d))


def crossing(rows: Sequence[BoundaryRow], target: float) -> tuple[float | None, tuple[float, float] | None]:
    """First radius where the rate reaches ``target``, linearly interpolated."""
    pts = sorted((r.rho, r.rate) for r in rows)
    prev = None
    for rho, rate in pts:
        if rate >= target:
            if prev is None:
                return rho, (rho, rho)
            r0, p0 = prev
            if rate == p0:
                return rho, (r0, rho)
            return r0 + (target - p0) * (rho - r0) / (rate - p0), (r0, rho)
        prev = (rho, rate)
    return None, None


def boundary_sweep(test: Procedure | str, n: int, d_list: Sequence[int], alpha: float, beta: float,
                   M: float, reps: int, seed: int, eps: float = 0.5,
                   multipliers: Sequence[float] = SWEEP_MULTIPLIERS, calib_reps: int = 200_000,
                   calibrations: dict[int, OrderStatCalibration] | None = None,
                   workers: int | None = None) -> BoundaryReport:
    """Power along ``rho = c * scale(n, d)`` for each ``d`` and each multiplier ``c``.

    The contamination fraction is held at ``eps`` and ``|mu| = rho / eps``.
    """
    test = Procedure(test)
    if not d_list:
        raise ConfigurationError("boundary sweep needs at least one dimension")
    calibrations = dict(calibrations or {})
    rows: list[BoundaryRow] = []
    crossings: list[Crossing] = []
    shared_psi2 = None
    for i, d in enumerate(d_list):
        scale = rate_scale(test, n, d)
        direction = sweep_direction(test, d)
        grid = tuple(GridPoint(eps, tuple((c * scale / eps) * direction), label=c) for c in multipliers)
        spec = ExperimentSpec(test, n, d, alpha, grid, reps, seed, beta=beta, M=M,
                              calib_reps=calib_reps, calib_seed=seed)
        calib = calibrations.get(d)
        if calib is None and test is Procedure.PSI2:
            # the projected sample size does not depend on d
            calib = shared_psi2 = shared_psi2 or resolve_calibration(spec, auto=True, workers=workers)
        report = estimate_errors(spec, calib, auto_calibrate=True, key_prefix=(i,), workers=workers)
        rows.extend(report.rows)
        rho_hat, bracket = crossing(report.rows, 1.0 - beta)
        crossings.append(Crossing(d, scale, rho_hat, bracket,
                                  None if rho_hat is None else rho_hat / scale))
    prov = {"tool_version": __version__, "seed": seed, "reps": reps, "test": test.value,
            "input_sha256": hashlib.sha256(json.dumps(
                [test.value, n, list(d_list), alpha, beta, M, reps, seed, eps, list(multipliers), calib_reps],
                sort_keys=True).encode()).hexdigest()}
    return BoundaryReport(rows, crossings, prov)
