from pvalue_cart.boosting import BoostConfig, BoostModel, boost_fit, boost_predict
from pvalue_cart.numerics import PValueParams, bonferroni_p, critical_value, p_value_approx
from pvalue_cart.splitfinder import NodeData, NoSplit, SplitCandidate, best_split
from pvalue_cart.stopping import StopConfig, select
from pvalue_cart.tree import (
    RegressionTree,
    TreeConfig,
    cost_complexity_sequence,
    fit_tree,
    predict,
)

__version__ = "0.1.0"
