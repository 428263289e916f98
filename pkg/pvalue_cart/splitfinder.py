from dataclasses import dataclass, field, replace
from typing import Tuple, Union

import numpy as np

from pvalue_cart.numerics import MIN_NODE_SIZE, PValueParams, bonferroni_p

# relative gap under which two split improvements count as tied
TIE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class NodeData:
    """
    Responses and covariates of the observations falling into one node.

    Parameters
    ----------
    y: array-like
        response vector of length n.

    x: array-like
        covariate matrix of shape [n x d].

    row_ids: array-like, optional
        indices of the rows in the original dataset. Default: 0..n-1
    """

    y: np.ndarray
    x: np.ndarray
    row_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 1:
            raise ValueError(f"y must be a vector. Got shape {y.shape}")
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ValueError(
                f"x must have shape [{y.shape[0]} x d]. Got shape {x.shape}"
            )
        if y.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("node data must hold at least one row and one column")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise ValueError("node data must be finite")
        row_ids = self.row_ids
        row_ids = np.arange(y.shape[0]) if row_ids is None else np.asarray(row_ids)
        if row_ids.shape != y.shape:
            raise ValueError(f"row_ids must have length {y.shape[0]}")

        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "row_ids", row_ids)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def subset(self, mask) -> "NodeData":
        return NodeData(self.y[mask], self.x[mask], self.row_ids[mask])

    def with_response(self, y) -> "NodeData":
        return NodeData(y, self.x, self.row_ids)


@dataclass(frozen=True)
class SplitCandidate:
    """Optimal greedy L2 split of one node together with its test statistic."""

    j_star: int
    r_star: int
    threshold: float
    u_scaled: float
    rel_improvement: float
    p_value: float
    left_mean: float
    right_mean: float
    s_total: float
    s_split: float
    n: int
    d: int


@dataclass(frozen=True)
class NoSplit:
    reason: str


SplitResult = Union[SplitCandidate, NoSplit]


def s_sums(y_sorted, r: int) -> Tuple[float, float, float]:
    """
    Within-group sums of squares for a split after rank r.

    Parameters
    ----------
    y_sorted: array-like
        responses ordered by one covariate.

    r: int
        number of observations in the left group, 1 <= r <= n-1.

    Returns
    -------
    (S_le, S_gt, S)
    """
    y = np.asarray(y_sorted, dtype=float)
    n = y.shape[0]
    if not 1 <= r <= n - 1:
        raise ValueError(f"split rank must lie in [1, {n - 1}]. Got r={r}")
    left, right = y[:r], y[r:]
    s_le = float(np.sum((left - left.mean()) ** 2))
    s_gt = float(np.sum((right - right.mean()) ** 2))
    s_total = float(np.sum((y - y.mean()) ** 2))
    return s_le, s_gt, s_total


def split_p_value(cand: SplitCandidate, n: int, d: int) -> float:
    """Bonferroni p-value of a split; 1.0 for nodes below MIN_NODE_SIZE."""
    if n < MIN_NODE_SIZE:
        return 1.0
    return bonferroni_p(cand.u_scaled, PValueParams(n, d))


def _midpoint(lo: float, hi: float) -> float:
    threshold = 0.5 * (lo + hi)
    if threshold >= hi:
        threshold = lo
    return threshold


def _candidate(node: NodeData, j: int, r: int, improvement: float, s_total: float):
    n, d = node.n, node.d
    order = np.argsort(node.x[:, j], kind="stable")
    xs = node.x[order, j]
    ys = node.y[order]
    rel = improvement / s_total
    cand = SplitCandidate(
        j_star=int(j),
        r_star=int(r),
        threshold=float(_midpoint(xs[r - 1], xs[r])),
        u_scaled=float(n * rel),
        rel_improvement=float(rel),
        p_value=1.0,
        left_mean=float(ys[:r].mean()),
        right_mean=float(ys[r:].mean()),
        s_total=float(s_total),
        s_split=float(s_total - improvement),
        n=n,
        d=d,
    )
    return _with_p_value(cand)


def _with_p_value(cand: SplitCandidate) -> SplitCandidate:
    return replace(cand, p_value=split_p_value(cand, cand.n, cand.d))


def best_split(node: NodeData, min_leaf: int = 1) -> SplitResult:
    """
    Finds the optimal greedy L2 split over all covariates and ranks.

    Ranks are admissible when both children hold at least `min_leaf`
    observations and the rank separates two distinct covariate values.
    Improvements within a relative `TIE_RTOL` of the maximum are ties;
    ties go to the smallest covariate index, then the smallest rank.

    Parameters
    ----------
    node: NodeData
        data of the node to split.

    min_leaf: int
        minimal number of observations per child. Default: 1

    Returns
    -------
    result: SplitCandidate or NoSplit
    """
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1. Got {min_leaf}")

    n = node.n
    if n < 2 * min_leaf or n < 2:
        return NoSplit("too-small")
    if np.all(node.y == node.y[0]):
        return NoSplit("constant-response")

    y_centered = node.y - node.y.mean()
    s_total = float(np.sum(y_centered**2))
    if s_total <= 0.0:
        return NoSplit("constant-response")

    order = np.argsort(node.x, axis=0, kind="stable")
    xs = np.take_along_axis(node.x, order, axis=0)
    distinct = xs[1:] > xs[:-1]
    if not distinct.any():
        return NoSplit("no-distinct-values")

    # left sums of centred responses; the right sum is its negative
    left_sums = np.cumsum(y_centered[order], axis=0)[:-1]
    r = np.arange(1, n, dtype=float)[:, None]
    improvement = left_sums**2 * n / (r * (n - r))

    admissible = distinct & (r >= min_leaf) & (n - r >= min_leaf)
    if not admissible.any():
        return NoSplit("no-admissible-rank")
    improvement = np.where(admissible, improvement, -np.inf)

    best = float(improvement.max())
    if not best > 0.0:
        return NoSplit("no-improvement")

    tied = improvement >= best * (1.0 - TIE_RTOL)
    j = int(np.flatnonzero(tied.any(axis=0))[0])
    r_idx = int(np.flatnonzero(tied[:, j])[0])
    return _candidate(node, j, r_idx + 1, float(improvement[r_idx, j]), s_total)


def brute_force_split(node: NodeData, min_leaf: int = 1) -> SplitResult:
    """
    Exhaustive O(n^2 d) recomputation of the optimal split from the S-sums.
    Used to verify `best_split`.
    """
    n = node.n
    if n < 2 * min_leaf or n < 2 or np.all(node.y == node.y[0]):
        return NoSplit("too-small" if n < 2 * min_leaf or n < 2 else "constant-response")

    found = []
    s_total = None
    for j in range(node.d):
        order = np.argsort(node.x[:, j], kind="stable")
        xs = node.x[order, j]
        ys = node.y[order]
        for r in range(min_leaf, n - min_leaf + 1):
            if not xs[r - 1] < xs[r]:
                continue
            s_le, s_gt, s_total = s_sums(ys, r)
            found.append((s_total - (s_le + s_gt), j, r))

    if not found or s_total is None or s_total <= 0.0:
        return NoSplit("no-admissible-rank")
    best = max(f[0] for f in found)
    if best <= 0.0:
        return NoSplit("no-admissible-rank")
    # candidates are in (j, r) order
    improvement, j, r = next(f for f in found if f[0] >= best * (1.0 - TIE_RTOL))
    return _candidate(node, j, r, improvement, s_total)
