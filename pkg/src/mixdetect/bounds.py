"""Lower-bound diagnostics: separation radii and likelihood-ratio second moments.

Two least-favourable priors are covered:

* l2 class: contamination at a uniformly random hypercube corner
  ``(r / sqrt(d)) * omega``, ``omega`` in ``{-1, 1}^d``.
* l-infinity class: contamination ``r * e_j`` on a uniformly random axis.

If ``E_0[L^2] < 1 + eta^2`` with ``eta = 2 (1 - alpha - beta)``, no level-alpha
test reaches type-II error ``beta`` against the prior.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .errors import DomainError, NumericalError

# Assumed bound on alpha + beta for the sharp l2 lower bound; the derivation
# itself needs (1 - alpha - beta)^2 > 1/2, i.e. alpha + beta < 1 - 1/sqrt(2).
SHARP_LEVEL_SUM = 0.29

RHO_DAGGER_NOTE = "constant C(alpha, beta, M) is not specified; reported with constant 1"


def c_of_m(M: float) -> float:
    return 1.0 + 0.5 * M * M * math.exp(M * M)


def eta(alpha: float, beta: float) -> float:
    return 2.0 * (1.0 - alpha - beta)


def rho_sharp(n: int, d: int, c: float) -> float:
    return d ** 0.25 / (2.0 * math.sqrt(c) * math.sqrt(n))


def rho_star(n: int, d: int, eta_value: float, c: float) -> float:
    return math.sqrt(math.log1p(d * eta_value ** 2) / (c * n))


def rho_dagger(n: int, d: int, constant: float = 1.0) -> float:
    """Upper radius of the projected test, up to its unspecified constant."""
    if n < 3:
        # ln ln n is not positive below n = e
        raise DomainError(f"rho_dagger needs n >= 3, got {n}")
    return constant * d ** 0.25 / math.sqrt(n) * math.sqrt(math.log(math.log(n)))


@dataclass(frozen=True)
class SeparationRates:
    n: int
    d: int
    alpha: float
    beta: float
    M: float
    c_of_m: float
    eta: float
    rho_sharp: float
    rho_star: float
    rho_dagger: float
    sharp_assumption_ok: bool
    rho_dagger_note: str = RHO_DAGGER_NOTE

    def to_dict(self) -> dict:
        return asdict(self)


def rates(n: int, d: int, alpha: float, beta: float, M: float) -> SeparationRates:
    if M <= 0:
        raise DomainError(f"M must be positive, got {M!r}")
    if n < 1 or d < 1:
        raise DomainError(f"n and d must be positive, got n={n}, d={d}")
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise DomainError(f"alpha and beta must lie in (0, 1), got {alpha}, {beta}")
    if alpha + beta >= 1:
        raise DomainError(f"alpha + beta must be < 1, got {alpha + beta}")
    ok = alpha + beta < SHARP_LEVEL_SUM
    if not ok:
        warnings.warn(f"alpha + beta = {alpha + beta:.3g} >= {SHARP_LEVEL_SUM}: "
                      "the l2 lower radius is not guaranteed", stacklevel=2)
    c = c_of_m(M)
    e = eta(alpha, beta)
    return SeparationRates(
        n=n, d=d, alpha=alpha, beta=beta, M=M, c_of_m=c, eta=e,
        rho_sharp=rho_sharp(n, d, c),
        rho_star=rho_star(n, d, e, c),
        rho_dagger=rho_dagger(n, d) if n >= 3 else math.nan,
        sharp_assumption_ok=ok,
    )


def _check_moment_args(n: int, d: int, eps: float, r: float) -> None:
    if n < 1 or d < 1:
        raise DomainError(f"n and d must be positive, got n={n}, d={d}")
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")
    if r < 0:
        raise DomainError(f"r must be nonnegative, got {r}")


def lr_second_moment_l2(n: int, d: int, eps: float, r: float) -> float:
    """``E_0[L^2]`` for the random-corner prior.

    ``<W, W'>`` for independent Rademacher vectors is distributed as
    ``2 Bin(d, 1/2) - d``, so the 4^d-term double sum collapses to d + 1 atoms.
    """
    _check_moment_args(n, d, eps, r)
    m = np.arange(d + 1)
    log_w = special.gammaln(d + 1) - special.gammaln(m + 1) - special.gammaln(d - m + 1) - d * math.log(2.0)
    y = (2 * m - d) / d
    log_terms = log_w + n * np.log1p(eps * eps * np.expm1(r * r * y))
    out = float(np.exp(special.logsumexp(log_terms)))
    if not math.isfinite(out):
        raise NumericalError(f"second moment overflowed for n={n}, d={d}, eps={eps}, r={r}")
    return out


def lr_second_moment_linf(n: int, d: int, eps: float, r: float) -> float:
    """``E_0[L^2]`` for the random-axis prior (closed form)."""
    _check_moment_args(n, d, eps, r)
    log_power = n * math.log1p(eps * eps * math.expm1(r * r))
    try:
        power = math.exp(log_power)
    except OverflowError as exc:
        raise NumericalError(f"second moment overflowed for n={n}, d={d}, eps={eps}, r={r}") from exc
    return power / d + (d - 1) / d


def indistinguishability_check(second_moment: float, alpha: float, beta: float) -> bool:
    """True when the prior cannot be told apart from H0 at levels (alpha, beta)."""
    if second_moment < 1.0:
        raise DomainError(f"a second moment of a unit-mean variable is >= 1, got {second_moment}")
    if alpha + beta >= 1:
        raise DomainError(f"alpha + beta must be < 1, got {alpha + beta}")
    return second_moment < 1.0 + eta(alpha, beta) ** 2


def taylor_bound_check(u: float, M: float) -> bool:
    """Check ``|e^u - 1 - u| <= (e^M / 2) u^2`` for ``|u| <= M``."""
    if M <= 0:
        raise DomainError(f"M must be positive, got {M}")
    if abs(u) > M:
        raise DomainError(f"|u| = {abs(u)} exceeds M = {M}")
    return abs(math.expm1(u) - u) <= 0.5 * math.exp(M) * u * u


def linf_indistinguishable_closed_form(n: int, d: int, eps: float, r: float, alpha: float, beta: float) -> bool:
    """Equivalent form ``eps^2 (e^{r^2} - 1) < exp(ln(1 + d eta^2) / n) - 1``."""
    lhs = eps * eps * math.expm1(r * r)
    rhs = math.expm1(math.log1p(d * eta(alpha, beta) ** 2) / n)
    return lhs < rhs
