"""Scalar Gaussian, chi-squared and binomial primitives.

Everything here is a pure function. Tail probabilities go through
``scipy.special`` routines that control *relative* error in the far tail
(``ndtr`` is erfc-based, ``bdtrc`` is a regularized incomplete beta), which
matters because the order-statistic thresholds invert the normal survival
function at probabilities of order 1/n.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class TailProb(float):
    """A probability that also remembers its complement ``1 - p`` exactly.

    Behaves as a plain float; quantile functions consult ``complement`` when
    ``p > 1/2`` so that probabilities near one invert without cancellation.
    """

    complement: float

    def __new__(cls, value: float, complement: float | None = None) -> "TailProb":
        obj = super().__new__(cls, value)
        obj.complement = 1.0 - float(value) if complement is None else float(complement)
        return obj

    def __repr__(self) -> str:
        return f"TailProb({float(self)!r}, complement={self.complement!r})"


def _upper(p: float) -> float:
    """``1 - p``, exact when ``p`` is a TailProb."""
    return p.complement if isinstance(p, TailProb) else 1.0 - float(p)


def _finite(x: float, name: str = "x") -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def _open_prob(p: float, name: str = "p") -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"{name} must lie in the open interval (0, 1), got {p!r}")
    return p


def std_normal_pdf(x: float) -> float:
    x = _finite(x)
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def std_normal_cdf(x: float) -> TailProb:
    x = _finite(x)
    return TailProb(special.ndtr(x), special.ndtr(-x))


def std_normal_sf(x: float) -> TailProb:
    """Upper tail 1 - Phi(x), accurate in relative terms for large ``x``."""
    x = _finite(x)
    return TailProb(special.ndtr(-x), special.ndtr(x))


def std_normal_quantile(p: float) -> float:
    """Inverse of the standard normal cdf; ``p`` must be strictly inside (0, 1)."""
    if float(p) in (0.0, 1.0):
        raise DomainError(f"quantile of p={float(p)} is infinite")
    _open_prob(p)
    if float(p) > 0.5:
        return -float(special.ndtri(_upper(p)))
    return float(special.ndtri(float(p)))


def std_normal_isf(p: float) -> float:
    """Inverse survival function: the x with 1 - Phi(x) = p."""
    if float(p) in (0.0, 1.0):
        raise DomainError(f"inverse survival of p={float(p)} is infinite")
    _open_prob(p)
    if float(p) > 0.5:
        return float(special.ndtri(_upper(p)))
    return -float(special.ndtri(float(p)))


def chisq_quantile(d: int, p: float) -> float:
    """The q with P(chi2_d <= q) = p."""
    if int(d) != d or d < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {d!r}")
    _open_prob(p)
    half = 0.5 * int(d)
    # invert whichever tail is smaller so 1 - p never loses digits
    if p < 0.5:
        return 2.0 * float(special.gammaincinv(half, float(p)))
    return 2.0 * float(special.gammainccinv(half, _upper(p)))


def binom_sf(n: int, p: float, k: int) -> TailProb:
    """P(Bin(n, p) >= k) for 0 <= k <= n + 1."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if int(k) != k or not 0 <= k <= n + 1:
        raise DomainError(f"k must be an integer in [0, {n + 1}], got {k!r}")
    if not 0.0 <= float(p) <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    if k == 0:
        return TailProb(1.0, 0.0)
    if k == n + 1:
        return TailProb(0.0, 1.0)
    return TailProb(special.bdtrc(int(k) - 1, int(n), p), special.bdtr(int(k) - 1, int(n), p))


def binom_sf_array(n: int, p: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Vectorised ``binom_sf`` for 1 <= k <= n (no validation)."""
    return special.bdtrc(np.asarray(k) - 1, n, p)


def chisq_bounds(d: int, lam: float, x: float) -> tuple[float, float]:
    """Deviation thresholds for a (noncentral) chi-squared variable.

    For T ~ chi2_d(lam), each of ``P(T >= upper)`` and ``P(T <= lower)`` is at
    most ``exp(-x)``. ``lam = 0`` recovers the central bounds.
    """
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d!r}")
    if lam < 0:
        raise DomainError(f"noncentrality must be nonnegative, got {lam!r}")
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    centre = d + lam
    spread = 2.0 * math.sqrt((d + 2.0 * lam) * x)
    return centre + spread + 2.0 * x, centre - spread
