import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pvalue_cart.splitfinder import NodeData
from pvalue_cart.tree import (
    DimensionError,
    RegressionTree,
    TreeConfig,
    TreeNode,
    cost_complexity_sequence,
    fit_tree,
    _collapse,
    internal_nodes,
    leaves,
    n_leaves,
    predict,
    predict_matrix,
    subtree_for_alpha,
)


def leaf(n, sse, mean=0.0):
    return TreeNode(mean=mean, n_node=n, sse=sse)


def split(left, right, sse, p_value, feature=0, threshold=0.0):
    n = left.n_node + right.n_node
    mean = (left.mean * left.n_node + right.mean * right.n_node) / n
    return TreeNode(mean, n, sse, feature, threshold, p_value, left, right)


def hand_tree():
    # g(left) = (10 - 8) / 1 = 2, g(root) = (100 - 38) / 2 = 31
    left = split(leaf(25, 4.0), leaf(25, 4.0), sse=10.0, p_value=0.2, threshold=-1.0)
    root = split(left, leaf(50, 30.0), sse=100.0, p_value=0.01)
    return RegressionTree(root=root, d=1)


def neufeld_like(n=600, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 4))
    y = 2.0 * (x[:, 0] <= 0) * (1.0 + (x[:, 1] > 0)) + 0.5 * rng.standard_normal(n)
    return NodeData(y, x)


def test_toy_tree_has_two_leaves():
    tree = fit_tree(NodeData([0.0, 0.0, 1.0, 1.0], [1.0, 2.0, 3.0, 4.0]), TreeConfig(4, 1))
    assert tree.n_leaves == 2
    assert tree.root.threshold == 2.5
    assert tree.root.p_value == 1.0
    assert predict(tree, [2.5]) == 0.0
    assert predict(tree, [2.6]) == 1.0


def test_depth_zero_is_root():
    tree = fit_tree(neufeld_like(), TreeConfig(max_depth=0))
    assert tree.root.is_leaf
    assert tree.n_leaves == 1


def test_grown_tree_respects_constraints():
    data = neufeld_like()
    tree = fit_tree(data, TreeConfig(max_depth=3, min_leaf=20))
    assert all(node.n_node >= 20 for node in leaves(tree.root))
    assert all(len(path) < 3 for path, _ in internal_nodes(tree.root))
    assert sum(node.n_node for node in leaves(tree.root)) == data.n
    assert tree.root.feature == 0
    for _, node in internal_nodes(tree.root):
        assert 0.0 <= node.p_value


def test_leaf_sse_and_means():
    data = neufeld_like()
    tree = fit_tree(data, TreeConfig(max_depth=2))
    fitted = predict_matrix(tree, data.x)
    residual_sse = float(np.sum((data.y - fitted) ** 2))
    assert_allclose(residual_sse, sum(node.sse for node in leaves(tree.root)))


def test_predict_matrix_matches_predict():
    data = neufeld_like()
    tree = fit_tree(data)
    rows = data.x[:50]
    assert_array_equal(predict_matrix(tree, rows), [predict(tree, row) for row in rows])
    assert_array_equal(predict_matrix(tree.root, rows), predict_matrix(tree, rows))


def test_dimension_mismatch():
    tree = fit_tree(neufeld_like())
    with pytest.raises(DimensionError, match="expected d=4"):
        predict(tree, [0.0, 0.0])
    with pytest.raises(DimensionError):
        predict_matrix(tree, np.zeros((3, 5)))


def test_weakest_link_sequence():
    seq = cost_complexity_sequence(hand_tree())
    assert seq.leaf_counts == [1, 2, 3]
    # root re-evaluated after collapsing the left node: (100 - 40) / 1
    assert_allclose(seq.alphas, [0.6, 0.02, 0.0])
    assert seq.added_p_values == [[], [0.01], [0.2]]
    assert_allclose(seq.cum_p, [0.0, 0.01, 0.21])
    assert seq.node_cum_p() == pytest.approx({"": 0.01, "0": 0.21})


def test_tied_nodes_collapse_together():
    left = split(leaf(25, 4.0), leaf(25, 4.0), sse=10.0, p_value=0.2)
    right = split(leaf(25, 4.0), leaf(25, 4.0), sse=10.0, p_value=0.3)
    root = RegressionTree(split(left, right, sse=100.0, p_value=0.01), d=1)
    seq = cost_complexity_sequence(root)
    assert seq.leaf_counts == [1, 2, 4]
    assert sorted(seq.added_p_values[2]) == [0.2, 0.3]


def test_sequence_properties_on_grown_tree():
    full = fit_tree(neufeld_like(), TreeConfig(max_depth=4))
    seq = cost_complexity_sequence(full)
    counts = seq.leaf_counts
    assert counts[0] == 1
    assert counts[-1] == full.n_leaves
    assert all(a < b for a, b in zip(counts, counts[1:]))
    assert seq.alphas[-1] == 0.0
    assert all(a >= b for a, b in zip(seq.alphas, seq.alphas[1:]))
    assert seq.cum_p[0] == 0.0
    assert all(a <= b for a, b in zip(seq.cum_p, seq.cum_p[1:]))
    assert seq.trees[-1] == full
    for k in range(1, len(seq)):
        new_nodes = n_leaves(seq.trees[k].root) - n_leaves(seq.trees[k - 1].root)
        assert len(seq.added_p_values[k]) == new_nodes


def test_subtree_for_alpha():
    seq = cost_complexity_sequence(hand_tree())
    assert subtree_for_alpha(seq, 0.0) == 2
    assert subtree_for_alpha(seq, 0.01) == 2
    assert subtree_for_alpha(seq, 0.02) == 1
    assert subtree_for_alpha(seq, 5.0) == 0


def test_constant_response_is_single_leaf():
    data = NodeData(np.full(50, 1.5), np.random.default_rng(1).standard_normal((50, 2)))
    tree = fit_tree(data)
    assert tree.root.is_leaf
    assert tree.root.mean == 1.5
    seq = cost_complexity_sequence(tree)
    assert len(seq) == 1
    assert seq.cum_p == [0.0]
    assert predict(tree, [5.0, -5.0]) == 1.5


def scaled_tree(c):
    left = split(leaf(25, 4.0 * c), leaf(25, 4.0 * c), sse=10.0 * c, p_value=0.2)
    right = split(leaf(25, 4.0 * c), leaf(25, 4.0 * c), sse=11.0 * c, p_value=0.3)
    return RegressionTree(split(left, right, sse=100.0 * c, p_value=0.01), d=1)


@pytest.mark.parametrize("c", [1e-9, 1e-4, 1e6])
def test_pruning_does_not_depend_on_response_units(c):
    reference = cost_complexity_sequence(scaled_tree(1.0))
    seq = cost_complexity_sequence(scaled_tree(c))
    assert reference.leaf_counts == [1, 2, 3, 4]
    assert seq.leaf_counts == reference.leaf_counts
    assert seq.added_p_values == reference.added_p_values
    assert_allclose(seq.alphas, c * np.asarray(reference.alphas))


@pytest.mark.parametrize("c", [1e-6, 1e3])
def test_rescaled_response_gives_same_sequence(c):
    data = neufeld_like()
    config = TreeConfig(max_depth=4)
    reference = cost_complexity_sequence(fit_tree(data, config))
    seq = cost_complexity_sequence(fit_tree(data.with_response(c * data.y), config))
    assert seq.leaf_counts == reference.leaf_counts
    assert_allclose(seq.cum_p, reference.cum_p, rtol=1e-6)
    assert_allclose(seq.alphas, c**2 * np.asarray(reference.alphas), rtol=1e-6, atol=0.0)


def test_collapsing_added_nodes_gives_previous_tree():
    seq = cost_complexity_sequence(fit_tree(neufeld_like(), TreeConfig(max_depth=4)))
    for k in range(1, len(seq)):
        before = {p for p, _ in internal_nodes(seq.trees[k - 1].root)}
        added = frozenset(p for p, _ in internal_nodes(seq.trees[k].root) if p not in before)
        assert added
        assert _collapse(seq.trees[k].root, added) == seq.trees[k - 1].root


def test_growing_is_deterministic():
    data = neufeld_like(seed=5)
    assert fit_tree(data) == fit_tree(data)
    first = cost_complexity_sequence(fit_tree(data))
    assert first == cost_complexity_sequence(fit_tree(data))
