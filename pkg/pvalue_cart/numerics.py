import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

# smallest node size for which the tail approximation is used
MIN_NODE_SIZE = 20


class DomainError(ValueError):
    """Argument outside the domain of a statistical function."""


class PenaltyKind(str, Enum):
    PVALUE = "pvalue"
    CP = "cp"
    BIC = "bic"


@dataclass(frozen=True)
class PValueParams:
    """
    Parameters of the p-value approximation.

    Parameters
    ----------
    n: int
        node sample size, at least MIN_NODE_SIZE.

    d: int
        covariate dimension (Bonferroni factor).
    """

    n: int
    d: int = 1

    def __post_init__(self):
        if self.n < MIN_NODE_SIZE:
            raise DomainError(
                f"approximation requires n >= {MIN_NODE_SIZE}. Got n={self.n}"
            )
        if self.d < 1:
            raise DomainError(f"covariate dimension must be >= 1. Got d={self.d}")


def std_normal_cdf(x):
    return ndtr(x)


def std_normal_quantile(q):
    q_arr = np.asarray(q, dtype=float)
    if not np.all((q_arr > 0.0) & (q_arr < 1.0)):
        raise DomainError(f"quantile level must lie in (0, 1). Got {q}")
    return ndtri(q)


def iterated_log(n: float, k: int) -> float:
    """k times iterated natural logarithm, e.g. k=2 gives ln(ln(n))."""
    value = float(n)
    for _ in range(k):
        if value <= 0.0:
            raise DomainError(f"ln_{k}({n}) is undefined")
        value = math.log(value)
    return value


def _centering(n: int) -> float:
    # (ln3(n) + ln2) / sqrt(2 ln2(n))
    return (iterated_log(n, 3) + math.log(2.0)) / math.sqrt(2.0 * iterated_log(n, 2))


def _exponent(n: int) -> float:
    return 2.0 * math.log(n / 2.0)


def p_value_approx(u: float, params: PValueParams) -> float:
    """
    Tail approximation p_n(u) of the single covariate split statistic under
    the no-signal null.

    Parameters
    ----------
    u: float
        observed scaled statistic U_max, nonnegative.

    params: PValueParams
        node size n (d is ignored here).

    Returns
    -------
    p: float
        1 - Phi(sqrt(u) - c_n) ** (2 ln(n/2)), in [0, 1].
    """
    if not u >= 0.0:
        raise DomainError(f"statistic must be nonnegative. Got u={u}")
    z = math.sqrt(u) - _centering(params.n)
    # 1 - exp(k log Phi(z)) without cancellation for small tails
    return float(-math.expm1(_exponent(params.n) * float(log_ndtr(z))))


def bonferroni_p(u: float, params: PValueParams) -> float:
    """d * p_n(u); deliberately not clamped to 1."""
    return params.d * p_value_approx(u, params)


def critical_value(eps: float, params: PValueParams) -> float:
    """
    Solve d * p_n(u) = eps for u in closed form.

    Parameters
    ----------
    eps: float
        significance level in (0, 1).

    params: PValueParams
        node size and covariate dimension.

    Returns
    -------
    u_eps: float
        the critical value of U_max at level eps.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"significance level must lie in (0, 1). Got eps={eps}")
    q = eps / params.d
    # Phi^{-1}((1 - q) ** (1 / k)) evaluated through its upper tail
    tail = -math.expm1(math.log1p(-q) / _exponent(params.n))
    root = _centering(params.n) - float(ndtri(tail))
    if root < 0.0:
        raise DomainError(
            f"eps/d={q} exceeds p_n(0) for n={params.n}; no critical value exists"
        )
    return root**2


def approx_null_cdf(u: float, params: PValueParams) -> float:
    """Approximate cdf 1 - d p_n(u) of U_max under the null."""
    return 1.0 - bonferroni_p(u, params)


def penalty_constant(
    kind: PenaltyKind, params: PValueParams, eps: Optional[float] = None
) -> float:
    """
    Multiplier of sigma2_hat in the single-split acceptance inequality
    MSE_1 - MSE_2 - penalty * sigma2_hat > 0.
    """
    kind = PenaltyKind(kind)
    if kind is PenaltyKind.PVALUE:
        if eps is None:
            raise DomainError("the p-value penalty needs a significance level eps")
        return critical_value(eps, params)
    if kind is PenaltyKind.CP:
        return 2.0
    return math.log(params.n)
