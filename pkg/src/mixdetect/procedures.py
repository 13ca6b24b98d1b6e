"""The three multidimensional detection procedures.

* ``psi1`` -- chi-squared test on the squared norm of the scaled sample mean.
* ``psi2`` -- split the sample, project the second half on the direction of
  the first half's mean, run the one-sided order-statistic test.
* ``psi3`` -- two-sided order-statistic tests on every coordinate with a
  Bonferroni split of the level over the ``2d`` one-sided tests.

Each procedure has a scalar entry point returning a ``TestReport`` and a
``*_batch`` twin that decides many samples of shape ``(reps, n, d)`` at once
for the Monte-Carlo harness. Both share the same decision rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import gaussian
from .errors import CalibrationError, DegenerateDirectionError, DomainError
from .orderstats import (
    OrderStatCalibration,
    calibrate_alpha_n,
    lower_exceeds,
    t_alpha_test,
    t_alpha_test_left,
    upper_exceeds,
)
from .report import Procedure, TestReport


@dataclass(frozen=True)
class Sample:
    """An ``n x d`` matrix of observations, one row per observation."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DomainError(f"sample must be a non-empty n x d matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("sample contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def as_sample(x: Sample | np.ndarray | list) -> Sample:
    return x if isinstance(x, Sample) else Sample(np.asarray(x))


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)


def psi1(x: Sample | np.ndarray, alpha: float) -> TestReport:
    x = as_sample(x)
    alpha = _check_alpha(alpha)
    total = x.data.sum(axis=0)
    stat = float(total @ total) / x.n
    thr = gaussian.chisq_quantile(x.d, 1.0 - alpha)
    return TestReport(Procedure.PSI1, stat > thr, alpha, stat, thr,
                      metadata={"n": x.n, "d": x.d})


def psi1_batch(xs: np.ndarray, alpha: float) -> np.ndarray:
    n, d = xs.shape[-2:]
    total = xs.sum(axis=-2)
    stat = np.einsum("...j,...j->...", total, total) / n
    return stat > gaussian.chisq_quantile(d, 1.0 - alpha)


@dataclass(frozen=True)
class ProjectionSplit:
    half_a: Sample
    half_y: Sample
    v_n: np.ndarray
    projections: np.ndarray


def split_sizes(n: int) -> tuple[int, int]:
    """Rows in the direction half and in the projected half (the latter gets the odd row)."""
    return n // 2, n - n // 2


def split_project(x: Sample | np.ndarray) -> ProjectionSplit:
    x = as_sample(x)
    if x.n < 4:
        raise DomainError(f"split needs at least 4 observations, got {x.n}")
    h, _ = split_sizes(x.n)
    a, y = x.data[:h], x.data[h:]
    mean_a = a.mean(axis=0)
    norm = float(np.linalg.norm(mean_a))
    if norm == 0.0:
        raise DegenerateDirectionError("mean of the first half is exactly zero; projection axis undefined")
    v = mean_a / norm
    return ProjectionSplit(Sample(a), Sample(y), v, y @ v)


def psi2(x: Sample | np.ndarray, alpha: float | None, calib: OrderStatCalibration) -> TestReport:
    """Projected order-statistic test. ``calib`` must be built for the projected-half size."""
    x = as_sample(x)
    alpha = calib.alpha if alpha is None else _check_alpha(alpha)
    _, m = split_sizes(x.n)
    if calib.n != m:
        raise CalibrationError(f"psi2 on n={x.n} needs a calibration for m={m}, got n={calib.n}")
    if not math.isclose(calib.alpha, alpha, rel_tol=1e-12):
        raise CalibrationError(f"calibration level {calib.alpha} differs from requested alpha={alpha}")
    try:
        split = split_project(x)
        projections, direction = split.projections, split.v_n.tolist()
    except DegenerateDirectionError:
        h = split_sizes(x.n)[0]
        if np.any(x.data[h:]):
            raise
        # an all-zero second half projects to zeros along every axis
        projections, direction = np.zeros(m), None
    inner = t_alpha_test(projections, calib)
    return TestReport(
        Procedure.PSI2, inner.reject, alpha, inner.statistic, inner.threshold,
        details=inner.details,
        metadata={"n": x.n, "d": x.d, "m": m, "direction": direction, **inner.metadata},
    )


def psi2_batch(xs: np.ndarray, calib: OrderStatCalibration) -> np.ndarray:
    n = xs.shape[-2]
    h, m = split_sizes(n)
    if calib.n != m:
        raise CalibrationError(f"psi2 on n={n} needs a calibration for m={m}, got n={calib.n}")
    mean_a = xs[..., :h, :].mean(axis=-2)
    norm = np.linalg.norm(mean_a, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise DegenerateDirectionError("mean of the first half is exactly zero in some replicate")
    proj = np.einsum("...ij,...j->...i", xs[..., h:, :], mean_a / norm)
    proj.sort(axis=-1)
    return upper_exceeds(proj, calib)


def psi3_level(alpha: float, d: int) -> float:
    """Per one-sided test level after the Bonferroni split."""
    return alpha / (2 * d)


def _check_psi3_calib(n: int, d: int, alpha: float, calib: OrderStatCalibration) -> None:
    if calib.n != n:
        raise CalibrationError(f"psi3 on n={n} needs a calibration for n={n}, got n={calib.n}")
    want = psi3_level(alpha, d)
    if not math.isclose(calib.alpha, want, rel_tol=1e-12):
        raise CalibrationError(f"psi3 with alpha={alpha}, d={d} needs a calibration at level {want}, got {calib.alpha}")


def psi3(x: Sample | np.ndarray, alpha: float, calib: OrderStatCalibration) -> TestReport:
    """Coordinate-wise two-sided order-statistic test.

    One calibration at level ``alpha / (2d)`` serves all ``2d`` one-sided tests
    since every coordinate column has the same length.
    """
    x = as_sample(x)
    alpha = _check_alpha(alpha)
    _check_psi3_calib(x.n, x.d, alpha, calib)
    details: list[dict[str, Any]] = []
    stats: list[float] = []
    for j in range(x.d):
        col = x.data[:, j]
        up = t_alpha_test(col, calib)
        down = t_alpha_test_left(col, calib)
        up_margin = max(dd["margin"] for dd in up.details)
        down_margin = max(dd["margin"] for dd in down.details)
        stats.append(max(up_margin, down_margin))
        details.append({
            "j": j,
            "upper_reject": up.reject,
            "lower_reject": down.reject,
            "upper_margin": up_margin,
            "lower_margin": down_margin,
            "reject": up.reject or down.reject,
        })
    return TestReport(
        Procedure.PSI3, any(dd["reject"] for dd in details), alpha, stats, 0.0,
        details=details,
        metadata={"n": x.n, "d": x.d, "per_test_level": calib.alpha, "alpha_n": calib.alpha_n,
                  "seed": calib.seed, "mc_reps": calib.mc_reps},
    )


def psi3_batch(xs: np.ndarray, alpha: float, calib: OrderStatCalibration) -> np.ndarray:
    n, d = xs.shape[-2:]
    _check_psi3_calib(n, d, alpha, calib)
    cols = np.sort(np.swapaxes(xs, -1, -2), axis=-1)
    hit = upper_exceeds(cols, calib) | lower_exceeds(cols, calib)
    return np.any(hit, axis=-1)


def calibration_for(procedure: Procedure | str, n: int, d: int, alpha: float,
                    mc_reps: int, seed: int, workers: int | None = None) -> OrderStatCalibration | None:
    """Build the calibration a procedure needs on an ``n x d`` sample (None for PSI1)."""
    procedure = Procedure(procedure)
    if procedure is Procedure.PSI1:
        return None
    if procedure is Procedure.PSI2:
        return calibrate_alpha_n(split_sizes(n)[1], alpha, mc_reps, seed, workers)
    if procedure is Procedure.PSI3:
        return calibrate_alpha_n(n, psi3_level(alpha, d), mc_reps, seed, workers)
    raise DomainError(f"no multidimensional procedure named {procedure.value}")


def run_test(procedure: Procedure | str, x: Sample | np.ndarray, alpha: float,
             calib: OrderStatCalibration | None = None) -> TestReport:
    procedure = Procedure(procedure)
    if procedure is Procedure.PSI1:
        return psi1(x, alpha)
    if calib is None:
        raise CalibrationError(f"{procedure.value} requires a calibration")
    if procedure is Procedure.PSI2:
        return psi2(x, alpha, calib)
    if procedure is Procedure.PSI3:
        return psi3(x, alpha, calib)
    raise DomainError(f"no multidimensional procedure named {procedure.value}")


def decide_batch(procedure: Procedure | str, xs: np.ndarray, alpha: float,
                 calib: OrderStatCalibration | None = None) -> np.ndarray:
    procedure = Procedure(procedure)
    if procedure is Procedure.PSI1:
        return psi1_batch(xs, alpha)
    if calib is None:
        raise CalibrationError(f"{procedure.value} requires a calibration")
    if procedure is Procedure.PSI2:
        return psi2_batch(xs, calib)
    return psi3_batch(xs, alpha, calib)
