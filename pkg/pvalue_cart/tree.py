import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

import numpy as np

from pvalue_cart.splitfinder import NodeData, NoSplit, best_split

logger = logging.getLogger(__name__)


class DimensionError(ValueError):
    """Covariate vector does not match the dimension a tree was grown on."""


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 4
    min_leaf: int = 20

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0. Got {self.max_depth}")
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1. Got {self.min_leaf}")


@dataclass(frozen=True)
class TreeNode:
    """
    Node of a binary L2 regression tree.

    Leaves carry only `mean`, `n_node` and `sse`. Internal nodes route
    x to `left` iff x[feature] <= threshold and carry the p-value of
    their split.
    """

    mean: float
    n_node: int
    sse: float
    feature: Optional[int] = None
    threshold: Optional[float] = None
    p_value: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def as_leaf(self) -> "TreeNode":
        return TreeNode(self.mean, self.n_node, self.sse)


@dataclass(frozen=True)
class RegressionTree:
    root: TreeNode
    d: int
    config: TreeConfig = field(default_factory=TreeConfig)

    @property
    def n_leaves(self) -> int:
        return n_leaves(self.root)


def leaves(node: TreeNode) -> Iterator[TreeNode]:
    if node.is_leaf:
        yield node
    else:
        yield from leaves(node.left)
        yield from leaves(node.right)


def internal_nodes(node: TreeNode, path: str = "") -> Iterator[Tuple[str, TreeNode]]:
    """Yields (path, node) for internal nodes in preorder; paths are strings of 0/1."""
    if node.is_leaf:
        return
    yield path, node
    yield from internal_nodes(node.left, path + "0")
    yield from internal_nodes(node.right, path + "1")


def n_leaves(node: TreeNode) -> int:
    return sum(1 for _ in leaves(node))


def _leaf(data: NodeData) -> TreeNode:
    mean = float(data.y.mean())
    sse = float(np.sum((data.y - mean) ** 2))
    return TreeNode(mean=mean, n_node=data.n, sse=sse)


def grow(data: NodeData, max_depth: int = 4, min_leaf: int = 20) -> TreeNode:
    """
    Grows a full greedy L2 CART tree.

    Splitting recurses until `best_split` returns NoSplit, the depth reaches
    `max_depth` or a node holds fewer than 2 * min_leaf observations. Every
    internal node carries the p-value of its split computed with its own
    sample size and the global covariate dimension.

    Parameters
    ----------
    data: NodeData
        training data.

    max_depth: int
        maximal depth of the tree. Default: 4

    min_leaf: int
        minimal number of observations per leaf. Default: 20

    Returns
    -------
    root: TreeNode
    """
    node = _leaf(data)
    if max_depth <= 0 or data.n < 2 * min_leaf:
        return node

    cand = best_split(data, min_leaf)
    if isinstance(cand, NoSplit):
        logger.debug("no split at n=%d: %s", data.n, cand.reason)
        return node

    go_left = data.x[:, cand.j_star] <= cand.threshold
    left = grow(data.subset(go_left), max_depth - 1, min_leaf)
    right = grow(data.subset(~go_left), max_depth - 1, min_leaf)
    return replace(
        node,
        feature=cand.j_star,
        threshold=cand.threshold,
        p_value=cand.p_value,
        left=left,
        right=right,
    )


def fit_tree(data: NodeData, config: TreeConfig = TreeConfig()) -> RegressionTree:
    root = grow(data, config.max_depth, config.min_leaf)
    return RegressionTree(root=root, d=data.d, config=config)


def _route(node: TreeNode, x: np.ndarray) -> TreeNode:
    while not node.is_leaf:
        if node.feature >= x.shape[0]:
            raise DimensionError(
                f"split on covariate {node.feature} but x has {x.shape[0]} components"
            )
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def predict(tree: Union[RegressionTree, TreeNode], x) -> float:
    """
    Mean of the leaf whose region contains x.

    Parameters
    ----------
    tree: RegressionTree or TreeNode

    x: array-like
        covariate vector with d components.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if isinstance(tree, RegressionTree):
        if x.shape[0] != tree.d:
            raise DimensionError(f"expected d={tree.d} covariates, found {x.shape[0]}")
        tree = tree.root
    return _route(tree, x).mean


def predict_matrix(tree: Union[RegressionTree, TreeNode], X) -> np.ndarray:
    """Row-wise predictions for a covariate matrix of shape [n x d]."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if isinstance(tree, RegressionTree):
        if X.shape[1] != tree.d:
            raise DimensionError(f"expected d={tree.d} covariates, found {X.shape[1]}")
        tree = tree.root

    out = np.empty(X.shape[0])

    def fill(node: TreeNode, rows: np.ndarray):
        if node.is_leaf:
            out[rows] = node.mean
            return
        if node.feature >= X.shape[1]:
            raise DimensionError(
                f"split on covariate {node.feature} but X has {X.shape[1]} columns"
            )
        go_left = X[rows, node.feature] <= node.threshold
        fill(node.left, rows[go_left])
        fill(node.right, rows[~go_left])

    fill(tree, np.arange(X.shape[0]))
    return out


# --------------------------------------------------------------------------
# cost-complexity pruning


@dataclass(frozen=True)
class NestedSequence:
    """
    Chain of nested subtrees ordered from the root to the full tree.

    Parameters
    ----------
    trees: list of RegressionTree
        subtrees with strictly increasing leaf counts, trees[0] is the root.

    alphas: list of float
        smallest cost-complexity parameter (in mean squared error units) at
        which each tree is optimal; decreasing, the full tree has 0.

    added_p_values: list of list of float
        p-values of the splits added when going from trees[k-1] to trees[k].

    cum_p: list of float
        sum of all split p-values of each tree.
    """

    trees: List[RegressionTree]
    alphas: List[float]
    added_p_values: List[List[float]]
    cum_p: List[float]

    def __len__(self):
        return len(self.trees)

    @property
    def leaf_counts(self) -> List[int]:
        return [t.n_leaves for t in self.trees]

    def node_cum_p(self) -> Dict[str, float]:
        """
        Cumulative p-value of the smallest tree in the sequence in which each
        internal node (addressed by its path) appears as an internal node.
        """
        first: Dict[str, float] = {}
        for tree, cum in zip(self.trees, self.cum_p):
            for path, _ in internal_nodes(tree.root):
                first.setdefault(path, cum)
        return first


def _is_cut(path: str, pruned: FrozenSet[str]) -> bool:
    return any(path[:k] in pruned for k in range(len(path) + 1))


def _collapse(node: TreeNode, pruned: FrozenSet[str], path: str = "") -> TreeNode:
    if node.is_leaf:
        return node
    if path in pruned:
        return node.as_leaf()
    return replace(
        node,
        left=_collapse(node.left, pruned, path + "0"),
        right=_collapse(node.right, pruned, path + "1"),
    )


def _subtree_risk(node: TreeNode, pruned: FrozenSet[str], path: str) -> Tuple[float, int]:
    if node.is_leaf or path in pruned:
        return node.sse, 1
    sse_l, m_l = _subtree_risk(node.left, pruned, path + "0")
    sse_r, m_r = _subtree_risk(node.right, pruned, path + "1")
    return sse_l + sse_r, m_l + m_r


def cost_complexity_sequence(full: RegressionTree, rtol: float = 1e-10) -> NestedSequence:
    """
    Weakest-link pruning of a grown tree.

    Repeatedly collapses the internal nodes t with minimal effective alpha
    g(t) = (R(t) - R(T_t)) / (|T_t| - 1); nodes sharing the minimum up to
    `rtol`, relative to the minimum or to the response variance, are
    collapsed together, so consecutive trees may differ by more than one
    split.

    Parameters
    ----------
    full: RegressionTree
        fully grown tree.

    Returns
    -------
    sequence: NestedSequence
        root first.
    """
    splits = dict(internal_nodes(full.root))
    scale = float(full.root.n_node)
    # response variance per observation; g values scale with it
    g_floor = full.root.sse / scale

    pruned: FrozenSet[str] = frozenset()
    snapshots = [(pruned, 0.0)]
    while True:
        active = [p for p in splits if not _is_cut(p, pruned)]
        if not active:
            break
        g = {}
        for path in active:
            risk, m = _subtree_risk(splits[path], pruned, path)
            g[path] = (splits[path].sse - risk) / (m - 1)
        g_min = min(g.values())
        tol = rtol * max(abs(g_min), g_floor)
        weakest = {p for p, v in g.items() if v <= g_min + tol}
        pruned = pruned | weakest
        snapshots.append((pruned, max(g_min, 0.0) / scale))

    snapshots.reverse()
    trees, alphas, added, cum_p = [], [], [], []
    previous: Dict[str, float] = {}
    for cut, alpha in snapshots:
        root = _collapse(full.root, cut)
        p_values = {p: node.p_value for p, node in internal_nodes(root)}
        trees.append(RegressionTree(root=root, d=full.d, config=full.config))
        alphas.append(alpha)
        added.append([p_values[p] for p in p_values if p not in previous])
        cum_p.append(math.fsum(p_values.values()))
        previous = p_values

    return NestedSequence(trees=trees, alphas=alphas, added_p_values=added, cum_p=cum_p)


def subtree_for_alpha(seq: NestedSequence, theta: float) -> int:
    """Index of the cost-complexity optimal tree of `seq` for parameter theta."""
    for i, alpha in enumerate(seq.alphas):
        if theta >= alpha:
            return i
    return len(seq) - 1
