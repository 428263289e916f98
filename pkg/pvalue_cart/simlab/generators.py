import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from pvalue_cart.numerics import iterated_log, std_normal_quantile
from pvalue_cart.simlab.streams import normal, substream
from pvalue_cart.splitfinder import NodeData


@dataclass(frozen=True)
class NullConfig:
    """
    No-signal model: Y ~ N(mu, sigma^2) independent of equicorrelated
    standard normal covariates.
    """

    n: int
    d: int = 1
    rho: float = 0.0
    mu: float = 0.0
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        _check_common(self.n, self.d, self.rho, self.sigma)


@dataclass(frozen=True)
class AltConfig:
    """
    Single mean shift model: given X_j = x, Y ~ N(mu_l, sigma^2) for x <= xi
    and N(mu_r, sigma^2) otherwise, with P(X_j <= xi) = t0.

    When `eta` is set, mu_r is replaced by mu_l + sigma * theta_n with theta_n
    from `stepsize_amplitude`.
    """

    n: int
    d: int = 1
    j: int = 0
    xi: float = 0.0
    t0: float = 0.5
    mu_l: float = 0.0
    mu_r: float = 1.0
    sigma: float = 1.0
    rho: float = 0.0
    seed: int = 0
    eta: Optional[float] = None

    def __post_init__(self):
        _check_common(self.n, self.d, self.rho, self.sigma)
        if not 0.0 < self.t0 < 1.0:
            raise ValueError(f"t0 must lie in (0, 1). Got {self.t0}")
        if not 0 <= self.j < self.d:
            raise ValueError(f"signal covariate j must lie in [0, {self.d - 1}]. Got {self.j}")
        if self.eta is None and self.mu_l == self.mu_r:
            raise ValueError("mu_l and mu_r must differ")

    @property
    def right_mean(self) -> float:
        if self.eta is None:
            return self.mu_r
        return self.mu_l + self.sigma * stepsize_amplitude(self.n, self.t0, self.eta)


@dataclass(frozen=True)
class NeufeldConfig:
    """Three-level step function on covariates 1-3 with N(0, I_d) covariates."""

    n: int = 500
    a: float = 1.0
    b: float = 1.0
    sigma: float = 1.0
    d: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.d < 3:
            raise ValueError(f"the regression function needs d >= 3. Got {self.d}")
        _check_common(self.n, self.d, 0.0, self.sigma)


def _check_common(n, d, rho, sigma):
    if n < 1:
        raise ValueError(f"n must be >= 1. Got {n}")
    if d < 1:
        raise ValueError(f"d must be >= 1. Got {d}")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1). Got {rho}")
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0. Got {sigma}")


def stepsize_amplitude(n: int, t0: float, eta: float) -> float:
    """theta_n = ((2 ln2(n))^(1/2) + eta) / (n t0 (1 - t0))^(1/2)."""
    return (math.sqrt(2.0 * iterated_log(n, 2)) + eta) / math.sqrt(n * t0 * (1.0 - t0))


def equicorrelated_normal(rng: np.random.Generator, n: int, d: int, rho: float) -> np.ndarray:
    """
    Unit variance normal covariates with common pairwise correlation rho,
    sqrt(rho) Z_0 + sqrt(1 - rho) Z_j. The common factor is drawn first.
    """
    common = normal(rng, (n, 1))
    own = normal(rng, (n, d))
    return math.sqrt(rho) * common + math.sqrt(1.0 - rho) * own


def neufeld_mean(x, a: float = 1.0, b: float = 1.0) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    inner = 1.0 + a * (x2 > 0) + (x2 * x3 > 0)
    return b * (x1 <= 0) * inner


def gen_null(cfg: NullConfig, *key: int) -> NodeData:
    rng = substream(cfg.seed, *key)
    x = equicorrelated_normal(rng, cfg.n, cfg.d, cfg.rho)
    y = cfg.mu + cfg.sigma * normal(rng, cfg.n)
    return NodeData(y, x)


def gen_alt(cfg: AltConfig, *key: int) -> NodeData:
    rng = substream(cfg.seed, *key)
    x = equicorrelated_normal(rng, cfg.n, cfg.d, cfg.rho)
    x[:, cfg.j] += cfg.xi - float(std_normal_quantile(cfg.t0))
    left = x[:, cfg.j] <= cfg.xi
    y = np.where(left, cfg.mu_l, cfg.right_mean) + cfg.sigma * normal(rng, cfg.n)
    return NodeData(y, x)


def gen_neufeld(cfg: NeufeldConfig, *key: int) -> NodeData:
    rng = substream(cfg.seed, *key)
    x = normal(rng, (cfg.n, cfg.d))
    y = neufeld_mean(x, cfg.a, cfg.b) + cfg.sigma * normal(rng, cfg.n)
    return NodeData(y, x)
