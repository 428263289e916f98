from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from pvalue_cart.numerics import PenaltyKind, PValueParams, penalty_constant
from pvalue_cart.splitfinder import SplitCandidate
from pvalue_cart.tree import NestedSequence, RegressionTree


@dataclass(frozen=True)
class StopConfig:
    """
    Parameters
    ----------
    delta: float
        tolerance for the cumulative p-value of a tree, in (0, inf].
        inf disables the rule. Default: 0.05
    """

    delta: float = 0.05

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ValueError(f"delta must be > 0. Got {self.delta}")


@dataclass(frozen=True)
class SelectionReport:
    selected_index: int
    selected_leaves: int
    cum_p_trace: List[float]
    stopped_at: Optional[int]
    tree: RegressionTree = field(repr=False, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "selected_index": self.selected_index,
            "selected_leaves": self.selected_leaves,
            "stopped_at": self.stopped_at,
            "cum_p_trace": list(self.cum_p_trace),
        }


def select(seq: NestedSequence, config: StopConfig = StopConfig()) -> SelectionReport:
    """
    Walks the nested sequence from the root and stops at the first tree whose
    cumulative p-value exceeds delta; its predecessor is selected.

    Parameters
    ----------
    seq: NestedSequence
        root first, cum_p[0] == 0.

    config: StopConfig

    Returns
    -------
    report: SelectionReport
    """
    stopped_at = None
    for k, cum in enumerate(seq.cum_p):
        if cum > config.delta:
            stopped_at = k
            break

    selected = len(seq) - 1 if stopped_at is None else stopped_at - 1
    if selected < 0:
        raise ValueError("the first tree of a sequence must have cumulative p-value 0")

    tree = seq.trees[selected]
    return SelectionReport(
        selected_index=selected,
        selected_leaves=tree.n_leaves,
        cum_p_trace=list(seq.cum_p),
        stopped_at=stopped_at,
        tree=tree,
    )


def accept_single_split(mse1: float, mse2: float, sigma2_hat: float, penalty: float) -> bool:
    """MSE_1 - MSE_2 - penalty * sigma2_hat > 0."""
    return mse1 - mse2 - penalty * sigma2_hat > 0.0


def accept_candidate(
    cand: SplitCandidate, kind: PenaltyKind = PenaltyKind.PVALUE, eps: float = 0.05
) -> bool:
    """Applies the p-value, C_p or BIC comparator to a split candidate."""
    penalty = penalty_constant(kind, PValueParams(cand.n, cand.d), eps)
    return accept_single_split(cand.s_total, cand.s_split, cand.s_total / cand.n, penalty)
