import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from pvalue_cart.losses import rmse_loss
from pvalue_cart.splitfinder import NodeData
from pvalue_cart.stopping import StopConfig, select
from pvalue_cart.tree import (
    DimensionError,
    RegressionTree,
    TreeConfig,
    cost_complexity_sequence,
    fit_tree,
    predict_matrix,
)

logger = logging.getLogger(__name__)


class StopReason(str, Enum):
    ROOT_LEARNER = "root_learner"
    MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class BoostConfig:
    """
    Parameters
    ----------
    learning_rate: float
        shrinkage applied to every weak learner, in (0, 1]. Default: 0.1

    max_depth: int
        maximal depth of the grown weak learners. Default: 3

    min_leaf: int
        minimal number of observations per leaf. Default: 20

    delta: float
        tolerance of the cumulative p-value rule, inf gives the full
        grown tree as weak learner. Default: 0.05

    max_iters: int
        safety cap on the number of boosting iterations. Default: 10_000
    """

    learning_rate: float = 0.1
    max_depth: int = 3
    min_leaf: int = 20
    delta: float = 0.05
    max_iters: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError(f"learning_rate must lie in (0, 1]. Got {self.learning_rate}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1. Got {self.max_iters}")
        # validates delta, max_depth and min_leaf
        StopConfig(self.delta)
        TreeConfig(self.max_depth, self.min_leaf)

    @property
    def tree_config(self) -> TreeConfig:
        return TreeConfig(self.max_depth, self.min_leaf)


def gbm_config(n_iters: int, learning_rate: float = 0.1, max_depth: int = 3, min_leaf: int = 20):
    """Fixed-iteration boosting with full grown weak learners, for comparison."""
    return BoostConfig(
        learning_rate=learning_rate,
        max_depth=max_depth,
        min_leaf=min_leaf,
        delta=math.inf,
        max_iters=n_iters,
    )


@dataclass(frozen=True)
class BoostIteration:
    iteration: int
    train_rmse: float
    test_rmse: Optional[float]
    leaves: int
    cum_p_trace: List[float]
    accepted: bool


@dataclass(frozen=True)
class BoostModel:
    base: float
    trees: List[RegressionTree]
    learning_rate: float
    stop_reason: StopReason
    d: int
    config: BoostConfig = field(default_factory=BoostConfig)
    history: List[BoostIteration] = field(default_factory=list, compare=False, repr=False)


def boost_predict_matrix(model: BoostModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if model.d is not None and X.shape[1] != model.d:
        raise DimensionError(f"expected d={model.d} covariates, found {X.shape[1]}")
    out = np.full(X.shape[0], model.base)
    for tree in model.trees:
        out += model.learning_rate * predict_matrix(tree, X)
    return out


def boost_predict(model: BoostModel, x) -> float:
    """base + learning_rate * sum of the weak learner predictions at x."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(boost_predict_matrix(model, x)[0])


def boost_fit(
    data: NodeData,
    config: BoostConfig = BoostConfig(),
    test: Optional[NodeData] = None,
) -> BoostModel:
    """
    L2 boosting with p-value selected weak learners.

    Each iteration grows a full tree on the current residuals, prunes it into
    a nested sequence and selects a tree with the cumulative p-value rule.
    Boosting stops when the selected tree is a bare root (which is not added)
    or after `max_iters` weak learners.

    Parameters
    ----------
    data: NodeData
        training data.

    config: BoostConfig

    test: NodeData, optional
        held-out data for the per-iteration test RMSE.

    Returns
    -------
    model: BoostModel
    """
    if test is not None and test.d != data.d:
        raise DimensionError(f"test data has d={test.d}, training data d={data.d}")

    base = float(data.y.mean())
    fitted = np.full(data.n, base)
    test_fitted = None if test is None else np.full(test.n, base)
    stop_config = StopConfig(config.delta)

    trees: List[RegressionTree] = []
    history: List[BoostIteration] = []
    stop_reason = StopReason.MAX_ITERS

    for i in range(1, config.max_iters + 1):
        residuals = data.y - fitted
        full = fit_tree(data.with_response(residuals), config.tree_config)
        report = select(cost_complexity_sequence(full), stop_config)
        learner = report.tree

        if learner.root.is_leaf:
            history.append(
                BoostIteration(
                    iteration=i,
                    train_rmse=rmse_loss(data.y, fitted),
                    test_rmse=None if test is None else rmse_loss(test.y, test_fitted),
                    leaves=1,
                    cum_p_trace=report.cum_p_trace,
                    accepted=False,
                )
            )
            stop_reason = StopReason.ROOT_LEARNER
            logger.info("iteration %d: weak learner is the root, stopping", i)
            break

        trees.append(learner)
        fitted = fitted + config.learning_rate * predict_matrix(learner, data.x)
        if test is not None:
            test_fitted = test_fitted + config.learning_rate * predict_matrix(learner, test.x)

        record = BoostIteration(
            iteration=i,
            train_rmse=rmse_loss(data.y, fitted),
            test_rmse=None if test is None else rmse_loss(test.y, test_fitted),
            leaves=learner.n_leaves,
            cum_p_trace=report.cum_p_trace,
            accepted=True,
        )
        history.append(record)
        logger.info(
            "iteration %d: %d leaves, train rmse %.6g", i, record.leaves, record.train_rmse
        )

    return BoostModel(
        base=base,
        trees=trees,
        learning_rate=config.learning_rate,
        stop_reason=stop_reason,
        d=data.d,
        config=config,
        history=history,
    )
