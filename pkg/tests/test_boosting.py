import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pvalue_cart.boosting import (
    BoostConfig,
    StopReason,
    boost_fit,
    boost_predict,
    boost_predict_matrix,
    gbm_config,
)
from pvalue_cart.simlab.generators import NeufeldConfig, NullConfig, gen_neufeld, gen_null
from pvalue_cart.splitfinder import NodeData
from pvalue_cart.tree import DimensionError, predict_matrix


def step_data(n=300, seed=1):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 2))
    y = 4.0 * (x[:, 0] > 0) + 2.0 * (x[:, 1] > 0.5) + 0.5 * rng.standard_normal(n)
    return NodeData(y, x)


def test_constant_response_gives_empty_ensemble():
    data = NodeData(np.full(100, 3.0), np.random.default_rng(0).standard_normal((100, 2)))
    model = boost_fit(data)
    assert model.trees == []
    assert model.stop_reason is StopReason.ROOT_LEARNER
    assert model.base == 3.0
    assert len(model.history) == 1 and not model.history[0].accepted
    assert boost_predict(model, [0.1, 0.2]) == 3.0


def test_signal_is_learned():
    data = step_data()
    model = boost_fit(data, BoostConfig(learning_rate=0.5, max_iters=50))
    assert len(model.trees) > 0
    assert model.trees[0].n_leaves >= 2
    accepted = [r.train_rmse for r in model.history if r.accepted]
    assert all(a >= b - 1e-12 for a, b in zip(accepted, accepted[1:]))
    assert accepted[-1] < float(np.std(data.y))


def test_prediction_is_shrunk_sum():
    data = step_data()
    model = boost_fit(data, BoostConfig(max_iters=5))
    expected = np.full(data.n, model.base)
    for tree in model.trees:
        expected += model.learning_rate * predict_matrix(tree, data.x)
    assert_allclose(boost_predict_matrix(model, data.x), expected)
    assert boost_predict(model, data.x[0]) == pytest.approx(expected[0])


def test_gbm_runs_fixed_number_of_iterations():
    model = boost_fit(step_data(), gbm_config(4))
    assert model.config.delta == math.inf
    assert len(model.trees) == 4
    assert model.stop_reason is StopReason.MAX_ITERS


def test_test_rmse_is_tracked():
    train, test = step_data(seed=1), step_data(n=100, seed=2)
    model = boost_fit(train, BoostConfig(max_iters=3), test)
    assert all(r.test_rmse is not None for r in model.history)
    with pytest.raises(DimensionError):
        boost_fit(train, BoostConfig(), NodeData(test.y, test.x[:, :1]))


@pytest.mark.parametrize("learning_rate", [0.0, 1.5])
def test_config_validation(learning_rate):
    with pytest.raises(ValueError):
        BoostConfig(learning_rate=learning_rate)
    with pytest.raises(ValueError):
        BoostConfig(max_iters=0)


def test_boosting_is_deterministic():
    data = step_data()
    first = boost_fit(data, BoostConfig(max_iters=20))
    second = boost_fit(data, BoostConfig(max_iters=20))
    assert first == second
    assert first.history == second.history


def test_boosting_on_three_level_step():
    cfg = NeufeldConfig(n=500, seed=5)
    train, test = gen_neufeld(cfg, 0), gen_neufeld(cfg, 1)
    model = boost_fit(train, BoostConfig(learning_rate=0.1, max_iters=300), test)
    assert len(model.trees) >= 1
    fitted = boost_predict_matrix(model, train.x)
    assert np.mean((train.y - fitted) ** 2) < np.var(train.y)
    test_rmse = math.sqrt(np.mean((test.y - boost_predict_matrix(model, test.x)) ** 2))
    base_rmse = math.sqrt(np.mean((test.y - model.base) ** 2))
    assert test_rmse <= base_rmse


@pytest.mark.slow
def test_noise_gives_empty_ensemble():
    empty = 0
    for rep in range(100):
        model = boost_fit(gen_null(NullConfig(n=500, d=5, seed=9), rep))
        empty += model.stop_reason is StopReason.ROOT_LEARNER and not model.trees
    assert empty >= 90
