import numpy as np
import pytest
from numpy.testing import assert_allclose

from pvalue_cart.numerics import PValueParams, bonferroni_p
from pvalue_cart.splitfinder import (
    NodeData,
    NoSplit,
    SplitCandidate,
    _midpoint,
    best_split,
    brute_force_split,
    s_sums,
)


def toy_node():
    return NodeData(y=[0.0, 0.0, 1.0, 1.0], x=[1.0, 2.0, 3.0, 4.0])


def test_s_sums():
    assert s_sums([0.0, 0.0, 1.0, 1.0], 2) == (0.0, 0.0, 1.0)
    s_le, s_gt, s = s_sums([1.0, 2.0, 3.0], 1)
    assert (s_le, s_gt) == (0.0, 0.5)
    assert s == pytest.approx(2.0)
    with pytest.raises(ValueError):
        s_sums([1.0, 2.0], 2)


def test_s_sums_single_left_observation():
    s_le, s_gt, s = s_sums([0.0, 0.0, 1.0, 1.0], 1)
    assert s_le == 0.0
    assert s_gt == pytest.approx(2.0 / 3.0)
    assert s == pytest.approx(1.0)



def test_toy_split():
    cand = best_split(toy_node())
    assert isinstance(cand, SplitCandidate)
    assert (cand.j_star, cand.r_star) == (0, 2)
    assert cand.threshold == 2.5
    assert cand.rel_improvement == pytest.approx(1.0)
    assert cand.u_scaled == pytest.approx(4.0)
    assert (cand.left_mean, cand.right_mean) == (0.0, 1.0)
    # nodes below the approximation floor get the sentinel p-value
    assert cand.p_value == 1.0


def test_node_data_validation():
    node = NodeData(y=[1.0, 2.0], x=[3.0, 4.0])
    assert node.x.shape == (2, 1)
    assert node.n == 2 and node.d == 1
    with pytest.raises(ValueError):
        NodeData(y=[1.0, 2.0], x=[[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        NodeData(y=[1.0, np.nan], x=[1.0, 2.0])


@pytest.mark.parametrize(
    "node, min_leaf, reason",
    [
        (NodeData([1.0], [1.0]), 1, "too-small"),
        (NodeData([0.0, 0.0, 1.0, 1.0], [1.0, 2.0, 3.0, 4.0]), 3, "too-small"),
        (NodeData([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]), 1, "constant-response"),
        (NodeData([0.0, 1.0, 2.0], [5.0, 5.0, 5.0]), 1, "no-distinct-values"),
        (NodeData([0.0, 1.0, 0.0, 1.0], [1.0, 1.0, 2.0, 2.0]), 1, "no-improvement"),
    ],
)
def test_no_split(node, min_leaf, reason):
    result = best_split(node, min_leaf)
    assert isinstance(result, NoSplit)
    assert result.reason == reason


def test_only_distinct_boundaries_are_admissible():
    cand = best_split(NodeData([0.0, 0.0, 1.0, 1.0], [1.0, 1.0, 2.0, 2.0]))
    assert cand.r_star == 2
    assert cand.threshold == 1.5


def test_ties_go_to_smallest_covariate():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    node = NodeData([0.0, 0.0, 1.0, 1.0], np.column_stack([x, x, x]))
    assert best_split(node).j_star == 0


def test_min_leaf_restricts_ranks():
    node = NodeData([5.0, 0.0, 0.0, 0.0, 0.0, 0.0], [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    assert best_split(node, 1).r_star == 1
    assert best_split(node, 2).r_star == 2


def test_midpoint_stays_below_right_value():
    lo = 1.0
    hi = np.nextafter(lo, 2.0)
    t = _midpoint(lo, hi)
    assert lo <= t < hi
    assert _midpoint(1.0, 3.0) == 2.0


def test_p_value_uses_node_size_and_dimension():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((100, 4))
    y = (x[:, 2] > 0) + rng.standard_normal(100)
    cand = best_split(NodeData(y, x))
    assert cand.n == 100 and cand.d == 4
    assert cand.p_value == bonferroni_p(cand.u_scaled, PValueParams(100, 4))
    assert cand.s_split == pytest.approx(cand.s_total * (1.0 - cand.rel_improvement))


def test_matches_exhaustive_search():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(2, 61))
        d = int(rng.integers(1, 6))
        node = NodeData(rng.standard_normal(n), rng.standard_normal((n, d)))
        fast = best_split(node)
        slow = brute_force_split(node)
        assert isinstance(fast, SplitCandidate) == isinstance(slow, SplitCandidate)
        if isinstance(fast, SplitCandidate):
            assert (fast.j_star, fast.r_star) == (slow.j_star, slow.r_star)
            assert_allclose(fast.u_scaled, slow.u_scaled, rtol=1e-9)
            assert fast.threshold == slow.threshold


def test_row_ids_follow_subsets():
    node = NodeData([1.0, 2.0, 3.0], [0.1, 0.2, 0.3], row_ids=[10, 11, 12])
    sub = node.subset(np.array([False, True, True]))
    assert list(sub.row_ids) == [11, 12]
    assert list(node.with_response([0.0, 0.0, 0.0]).row_ids) == [10, 11, 12]


def test_full_improvement_only_for_constant_children():
    x = [1.0, 2.0, 3.0, 4.0]
    assert best_split(NodeData([0.0, 0.0, 1.0, 1.0], x)).rel_improvement == 1.0
    assert best_split(NodeData([0.0, 0.1, 1.0, 1.0], x)).rel_improvement < 1.0
    assert best_split(NodeData([0.0, 0.0, 1.0, 1.1], x)).rel_improvement < 1.0


def partition(node, cand):
    goes_left = node.x[:, cand.j_star] <= cand.threshold
    return frozenset([frozenset(np.flatnonzero(goes_left)), frozenset(np.flatnonzero(~goes_left))])


def random_nodes(seed, count=100):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(3, 61))
        d = int(rng.integers(1, 6))
        yield NodeData(rng.standard_normal(n), rng.standard_normal((n, d)))


@pytest.mark.parametrize("scale, shift", [(3.7, 1e3), (-2.0, 0.0), (1e-6, 0.0)])
def test_location_scale_invariance(scale, shift):
    for node in random_nodes(31):
        base = best_split(node)
        moved = best_split(node.with_response(scale * node.y + shift))
        assert partition(node, moved) == partition(node, base)
        assert_allclose(moved.rel_improvement, base.rel_improvement, rtol=1e-8)
        assert_allclose(moved.u_scaled, base.u_scaled, rtol=1e-8)


def test_column_permutation_invariance():
    rng = np.random.default_rng(32)
    for node in random_nodes(33):
        perm = rng.permutation(node.d)
        permuted = NodeData(node.y, node.x[:, perm])
        base = best_split(node)
        cand = best_split(permuted)
        assert partition(permuted, cand) == partition(node, base)
        assert_allclose(cand.u_scaled, base.u_scaled, rtol=1e-9)


def test_matches_exhaustive_search_with_repeated_partitions():
    # duplicated and mirrored columns induce the same partitions in several places
    rng = np.random.default_rng(77)
    for _ in range(150):
        n = int(rng.integers(3, 40))
        base = rng.integers(0, 5, size=(n, 2)).astype(float)
        pool = np.column_stack([base, -base, base])
        cols = rng.choice(pool.shape[1], size=int(rng.integers(2, 6)))
        node = NodeData(rng.standard_normal(n), pool[:, cols])
        fast = best_split(node)
        slow = brute_force_split(node)
        assert isinstance(fast, SplitCandidate) == isinstance(slow, SplitCandidate)
        if isinstance(fast, SplitCandidate):
            assert (fast.j_star, fast.r_star) == (slow.j_star, slow.r_star)
            assert_allclose(fast.u_scaled, slow.u_scaled, rtol=1e-9)
