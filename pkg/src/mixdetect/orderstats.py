"""Unidimensional order-statistic tests and their level calibration.

For a standard Gaussian sample ``Z_1..Z_n`` the k-th largest value exceeds
``q`` exactly when at least ``k`` observations exceed ``q``, so

    P(Z_(n-k+1) > q) = P(Bin(n, 1 - Phi(q)) >= k).

The per-order quantiles ``q_{u,k}`` are obtained by inverting that identity.
Only the joint level correction ``alpha_n`` needs Monte Carlo.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import optimize

from . import __version__, gaussian
from .errors import CalibrationError, DomainError, NumericalError
from .report import Procedure, TestReport
from .rng import ordered_map, stream

log = logging.getLogger(__name__)

# bisection stops once the bracket is narrower than alpha / BISECT_REL_WIDTH
BISECT_REL_WIDTH = 1000.0
BISECT_MAX_ITER = 40
# one MC batch holds about this many normal draws
BATCH_DRAWS = 1 << 22
MIN_EXPECTED_REJECTIONS = 100


@dataclass(frozen=True)
class DyadicGrid:
    n: int
    ks: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.ks)

    def __iter__(self):
        return iter(self.ks)


def dyadic_grid(n: int) -> DyadicGrid:
    """Powers of two ``2^j`` for ``0 <= j <= floor(log2(n / 2))``."""
    if int(n) != n or n < 2:
        raise DomainError(f"dyadic grid needs n >= 2, got {n!r}")
    n = int(n)
    # floor(log2(n/2)) == bit_length(n) - 2 for every integer n >= 2
    top = n.bit_length() - 2
    return DyadicGrid(n, tuple(1 << j for j in range(top + 1)))


def t_threshold(alpha: float, k: int, n: int) -> float:
    """Explicit upper bound ``t_{alpha,k}`` on the order-statistic quantile.

    Returns ``math.inf`` when ``k <= 2 ln(2/alpha)``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if k < 1 or 2 * k > n:
        raise DomainError(f"k must satisfy 1 <= k <= n/2, got k={k}, n={n}")
    c = 2.0 * math.log(2.0 / alpha)
    if k <= c:
        return math.inf
    target = (k / n) * (1.0 - math.sqrt(c / k))
    return gaussian.std_normal_isf(target)


def order_stat_quantile(n: int, k: int, u: float) -> float:
    """``q_{u,k}``: the (1-u) quantile of the k-th largest of n standard normals."""
    if int(n) != n or n < 1 or int(k) != k or not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got n={n!r}, k={k!r}")
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u!r}")
    n, k = int(n), int(k)
    if n == 1:
        return gaussian.std_normal_isf(u)

    def excess(q: float) -> float:
        return gaussian.binom_sf(n, gaussian.std_normal_sf(q), k) - u

    lo, hi = -40.0, 40.0
    try:
        q, res = optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                                 maxiter=500, full_output=True)
    except ValueError as exc:
        raise NumericalError(f"no sign change for q_(u={u}, k={k}) with n={n} on [{lo}, {hi}]") from exc
    if not res.converged:
        raise NumericalError(
            f"q_(u={u}, k={k}) with n={n} did not converge: {res.iterations} iterations, "
            f"last residual {excess(q):.3e}"
        )
    return float(q)


def grid_quantiles(grid: DyadicGrid, u: float) -> tuple[float, ...]:
    return tuple(order_stat_quantile(grid.n, k, u) for k in grid.ks)


@dataclass(frozen=True)
class OrderStatCalibration:
    """Calibrated thresholds for the dyadic order-statistic test at sample size ``n``.

    ``alpha_n`` is the per-order level; ``quantiles[i]`` is ``q_{alpha_n, k_i}``
    for ``k_i = grid.ks[i]``.
    """

    n: int
    alpha: float
    alpha_n: float
    quantiles: tuple[float, ...]
    mc_reps: int
    seed: int
    tolerance: float
    estimated_level: float | None = None
    grid: DyadicGrid = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid", dyadic_grid(self.n))

    def quantile_map(self) -> dict[int, float]:
        return dict(zip(self.grid.ks, self.quantiles))

    def validate(self) -> None:
        """Check the structural invariants; raises CalibrationError."""
        ks = self.grid.ks
        if len(self.quantiles) != len(ks):
            raise CalibrationError(f"expected {len(ks)} quantiles for n={self.n}, got {len(self.quantiles)}")
        if not 0.0 < self.alpha < 1.0:
            raise CalibrationError(f"alpha out of range: {self.alpha}")
        floor = self.alpha / len(ks)
        slack = 1e-12 * self.alpha
        if not floor - slack <= self.alpha_n <= self.alpha + slack:
            raise CalibrationError(
                f"alpha_n={self.alpha_n} outside the bracket [{floor}, {self.alpha}]"
            )
        q = np.asarray(self.quantiles)
        if not np.all(np.isfinite(q)):
            raise CalibrationError("quantiles must be finite")
        if np.any(np.diff(q) >= 0):
            raise CalibrationError("quantiles must strictly decrease in k")
        for k, qk in zip(ks, q):
            t = t_threshold(self.alpha_n, k, self.n)
            if qk > t + 1e-9:
                raise CalibrationError(f"q={qk} exceeds the explicit bound t={t} at k={k}")
            exact = order_stat_quantile(self.n, k, self.alpha_n)
            if abs(exact - qk) > 1e-9 * max(1.0, abs(exact)):
                raise CalibrationError(f"stored q={qk} at k={k} disagrees with recomputed {exact}")

    def to_dict(self) -> dict[str, Any]:
        entries = []
        for k, q in zip(self.grid.ks, self.quantiles):
            t = t_threshold(self.alpha_n, k, self.n)
            entries.append({"k": k, "q": q, "t": "+inf" if math.isinf(t) else t})
        return {
            "n": self.n,
            "alpha": self.alpha,
            "alpha_n": self.alpha_n,
            "seed": self.seed,
            "mc_reps": self.mc_reps,
            "tolerance": self.tolerance,
            "estimated_level": self.estimated_level,
            "quantiles": entries,
            "tool_version": __version__,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "OrderStatCalibration":
        try:
            n = int(data["n"])
            entries = sorted(data["quantiles"], key=lambda e: int(e["k"]))
            calib = cls(
                n=n,
                alpha=float(data["alpha"]),
                alpha_n=float(data["alpha_n"]),
                quantiles=tuple(float(e["q"]) for e in entries),
                mc_reps=int(data["mc_reps"]),
                seed=int(data["seed"]),
                tolerance=float(data.get("tolerance", 0.0)),
                estimated_level=data.get("estimated_level"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CalibrationError(f"malformed calibration document: {exc}") from exc
        if [int(e["k"]) for e in entries] != list(calib.grid.ks):
            raise CalibrationError(f"k values do not match the dyadic grid for n={n}")
        calib.validate()
        return calib

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "OrderStatCalibration":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise CalibrationError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


def null_order_stat_bank(n: int, ks: Sequence[int], reps: int, seed: int,
                         workers: int | None = None) -> np.ndarray:
    """Draw ``reps`` null samples of size n; return the k-th largest values, shape (reps, len(ks)).

    Batch ``b`` always uses stream ``(seed, b)`` and a batch size that only
    depends on ``n``, so the bank is identical for any worker count.
    """
    cols = np.array([n - k for k in ks])
    per_batch = max(1, BATCH_DRAWS // n)
    n_batches = -(-reps // per_batch)

    def one(b: int) -> np.ndarray:
        rows = min(per_batch, reps - b * per_batch)
        z = stream(seed, b).standard_normal((rows, n))
        z.sort(axis=1)
        return z[:, cols]

    return np.concatenate(ordered_map(one, range(n_batches), workers), axis=0)


def joint_exceedance(bank: np.ndarray, thresholds: np.ndarray) -> float:
    return float(np.mean(np.any(bank > thresholds, axis=1)))


def calibrate_alpha_n(n: int, alpha: float, mc_reps: int = 200_000, seed: int = 0,
                      workers: int | None = None) -> OrderStatCalibration:
    """Estimate ``alpha_n`` by bisection over a fixed bank of null samples.

    Reusing the same bank for every candidate makes the estimated joint
    exceedance curve monotone in ``u``, which is what bisection needs.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"calibration needs n >= 2, got {n!r}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if alpha * mc_reps < MIN_EXPECTED_REJECTIONS:
        raise CalibrationError(
            f"mc_reps={mc_reps} cannot resolve alpha={alpha}: need alpha*mc_reps >= "
            f"{MIN_EXPECTED_REJECTIONS} (mc_reps >= {math.ceil(MIN_EXPECTED_REJECTIONS / alpha)})"
        )
    n = int(n)
    grid = dyadic_grid(n)
    tol = alpha / BISECT_REL_WIDTH

    if len(grid) == 1:
        # one order statistic: q_{alpha,1} has exact level alpha
        return OrderStatCalibration(n, alpha, alpha, grid_quantiles(grid, alpha),
                                    int(mc_reps), int(seed), tol, alpha)

    bank = null_order_stat_bank(n, grid.ks, int(mc_reps), int(seed), workers)

    def level(u: float) -> float:
        return joint_exceedance(bank, np.array(grid_quantiles(grid, u)))

    lo, hi = alpha / len(grid), alpha
    best, best_level = lo, level(lo)
    if best_level > alpha:
        # union bound guarantees the floor; only MC noise can land here
        log.warning("estimated level %.5f at the Bonferroni floor exceeds alpha=%g", best_level, alpha)
    else:
        hi_level = level(hi)
        if hi_level <= alpha:
            best, best_level = hi, hi_level
        else:
            for _ in range(BISECT_MAX_ITER):
                if hi - lo < tol:
                    break
                mid = 0.5 * (lo + hi)
                mid_level = level(mid)
                if mid_level <= alpha:
                    lo, best, best_level = mid, mid, mid_level
                else:
                    hi = mid
    log.info("calibrated n=%d alpha=%g: alpha_n=%.6g (estimated level %.5f, %d reps)",
             n, alpha, best, best_level, mc_reps)
    return OrderStatCalibration(n, alpha, best, grid_quantiles(grid, best),
                                int(mc_reps), int(seed), tol, best_level)


def _check_length(z: np.ndarray, calib: OrderStatCalibration) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.shape[0] != calib.n:
        raise DomainError(f"expected a vector of length {calib.n}, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise DomainError("sample contains non-finite values")
    return z


def upper_exceeds(sorted_z: np.ndarray, calib: OrderStatCalibration) -> np.ndarray:
    """Vectorised T+ decision for arrays sorted ascending along the last axis."""
    cols = [calib.n - k for k in calib.grid.ks]
    return np.any(sorted_z[..., cols] > np.asarray(calib.quantiles), axis=-1)


def lower_exceeds(sorted_z: np.ndarray, calib: OrderStatCalibration) -> np.ndarray:
    """Vectorised T- decision: some k-th smallest value falls below -q_k."""
    cols = [k - 1 for k in calib.grid.ks]
    return np.any(sorted_z[..., cols] < -np.asarray(calib.quantiles), axis=-1)


def t_alpha_test(z: Sequence[float], calib: OrderStatCalibration) -> TestReport:
    """T+: reject when some k-th largest value exceeds ``q_{alpha_n,k}``."""
    z = _check_length(z, calib)
    zs = np.sort(z, kind="stable")
    stats, details = [], []
    for k, q in zip(calib.grid.ks, calib.quantiles):
        v = float(zs[calib.n - k])
        stats.append(v)
        details.append({"k": k, "order_stat": v, "threshold": q, "margin": v - q, "reject": v > q})
    return TestReport(
        procedure=Procedure.T_ALPHA,
        reject=any(d["reject"] for d in details),
        alpha=calib.alpha,
        statistic=stats,
        threshold=list(calib.quantiles),
        details=details,
        metadata=_provenance(calib),
    )


def t_alpha_test_left(z: Sequence[float], calib: OrderStatCalibration) -> TestReport:
    """T-: reject when some k-th smallest value falls below ``-q_{alpha_n,k}``.

    Implemented by negation, so decisions coincide exactly with ``t_alpha_test(-z)``.
    """
    z = _check_length(z, calib)
    report = t_alpha_test(-z, calib)
    report.procedure = Procedure.T_ALPHA_LEFT
    return report


def _provenance(calib: OrderStatCalibration) -> dict[str, Any]:
    return {"n": calib.n, "alpha_n": calib.alpha_n, "seed": calib.seed, "mc_reps": calib.mc_reps}


def lemma_b1_lhs(n: int, alpha: float, d: int = 1) -> float:
    if n < 3:
        raise DomainError(f"precondition is stated for n >= 3, got {n}")
    mult = 2.0 if d == 1 else 4.0 * d
    return 8.25 * math.log(mult * math.log2(n / 2.0) / alpha) / n


def lemma_b1_precondition(n: int, alpha: float, M: float, d: int = 1) -> bool:
    """Dense-regime assumption under which the order-statistic test is powerful.

    ``d == 1`` checks the unidimensional form, ``8.25 ln(2 log2(n/2)/alpha)/n <= 1 - Phi(M)``;
    ``d >= 2`` checks the per-coordinate version with ``4 d`` in place of ``2``.
    """
    return lemma_b1_lhs(n, alpha, d) <= gaussian.std_normal_sf(M)
