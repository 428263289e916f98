import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from pvalue_cart.boosting import BoostConfig, boost_fit, gbm_config
from pvalue_cart.losses import mse_loss, rmse_loss, sse_loss
from pvalue_cart.numerics import (
    MIN_NODE_SIZE,
    PenaltyKind,
    PValueParams,
    approx_null_cdf,
    critical_value,
)
from pvalue_cart.simlab.generators import (
    AltConfig,
    NeufeldConfig,
    NullConfig,
    gen_alt,
    gen_neufeld,
    gen_null,
)
from pvalue_cart.simlab.streams import permutation, substream
from pvalue_cart.splitfinder import NodeData, NoSplit, best_split
from pvalue_cart.stopping import StopConfig, accept_candidate, select
from pvalue_cart.tree import (
    TreeConfig,
    cost_complexity_sequence,
    fit_tree,
    predict_matrix,
    subtree_for_alpha,
)

logger = logging.getLogger(__name__)

DEFAULT_N_GRID = (100, 250, 500, 1000, 2500, 5000, 10000)


@dataclass
class ExperimentResult:
    """
    Rows of one experiment plus a summary and the full configuration.

    `save(path)` writes the rows as CSV to `path` and a JSON sidecar with
    config and summary next to it (same name, suffix .json).
    """

    name: str
    rows: List[Dict[str, Any]]
    summary: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def sidecar(self) -> Dict[str, Any]:
        return {"experiment": self.name, "config": self.config, "summary": self.summary}

    def save(self, path) -> Path:
        path = Path(path)
        self.frame().to_csv(path, index=False)
        sidecar = path.with_suffix(".json")
        sidecar.write_text(json.dumps(self.sidecar(), indent=1, sort_keys=True) + "\n")
        logger.info("experiment '%s' saved as '%s' and '%s'", self.name, path, sidecar)
        return sidecar


def _progress(iterable, desc):
    return tqdm(iterable, desc=desc, leave=False, disable=None)


def _u_max(node: NodeData, min_leaf: int) -> float:
    cand = best_split(node, min_leaf)
    return 0.0 if isinstance(cand, NoSplit) else cand.u_scaled


# --------------------------------------------------------------------------


def experiment_null_cdf(
    cfg: NullConfig,
    reps: int = 10_000,
    quantiles: Sequence[float] = (0.9, 0.95, 0.99),
    min_leaf: int = 1,
) -> ExperimentResult:
    """
    Empirical distribution of U_max under the null from `reps` datasets,
    compared with the approximation 1 - d p_n(u).

    Parameters
    ----------
    cfg: NullConfig
        data generator; replication r uses the stream (cfg.seed, r).

    reps: int
        number of realisations. Default: 10_000

    quantiles: list of float
        levels of the reported empirical and approximate quantiles.

    min_leaf: int
        minimal child size in the split scan. Default: 1 (all ranks)

    Returns
    -------
    result: ExperimentResult
        one row per realisation in increasing order of U_max.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1. Got {reps}")

    sample = np.array(
        [_u_max(gen_null(cfg, r), min_leaf) for r in _progress(range(reps), "null cdf")]
    )
    sample.sort()

    params = PValueParams(cfg.n, cfg.d) if cfg.n >= MIN_NODE_SIZE else None
    rows = [
        {
            "u": float(u),
            "ecdf": (i + 1) / reps,
            "approx_cdf": approx_null_cdf(float(u), params) if params else float("nan"),
        }
        for i, u in enumerate(sample)
    ]
    summary = {
        "quantiles": {f"{q:g}": float(np.quantile(sample, q)) for q in quantiles},
        "approx_quantiles": {
            f"{q:g}": critical_value(1.0 - q, params) if params else None for q in quantiles
        },
    }
    config = {"generator": asdict(cfg), "reps": reps, "min_leaf": min_leaf}
    return ExperimentResult("null-cdf", rows, summary, config)


def experiment_detection(
    base: AltConfig,
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    reps: int = 1000,
    eps: float = 0.05,
    amplitude: Optional[Callable[[int], float]] = None,
    min_leaf: int = 1,
) -> ExperimentResult:
    """
    Fraction of realisations of the alternative with U_max > u_eps for every
    sample size of the grid.

    The right mean is mu_l + amplitude(n), by default n^(-1/5); a generator
    with `eta` set uses its step-size family instead.
    """
    amplitude = amplitude or (lambda n: n ** (-0.2))
    rows = []
    for g, n in enumerate(n_grid):
        cfg = replace(base, n=int(n), mu_r=base.mu_l + amplitude(int(n)))
        u_eps = critical_value(eps, PValueParams(cfg.n, cfg.d))
        hits = sum(
            _u_max(gen_alt(cfg, g, r), min_leaf) > u_eps
            for r in _progress(range(reps), f"detection n={n}")
        )
        rows.append(
            {
                "n": int(n),
                "amplitude": cfg.right_mean - cfg.mu_l,
                "u_eps": u_eps,
                "detection_fraction": hits / reps,
            }
        )
        logger.info("n=%d: detection fraction %.3f", n, hits / reps)

    config = {
        "generator": asdict(base),
        "n_grid": [int(n) for n in n_grid],
        "reps": reps,
        "eps": eps,
        "min_leaf": min_leaf,
    }
    summary = {"detection_fraction": {str(r["n"]): r["detection_fraction"] for r in rows}}
    return ExperimentResult("detection", rows, summary, config)


def _neufeld_fit(train: NodeData, delta: float, tree_config: TreeConfig):
    seq = cost_complexity_sequence(fit_tree(train, tree_config))
    return seq, select(seq, StopConfig(delta))


def experiment_neufeld(
    cfg: NeufeldConfig,
    delta: float = 0.05,
    test_n: int = 500,
    max_depth: int = 4,
    min_leaf: int = 20,
) -> ExperimentResult:
    """
    Grows a full tree on Neufeld data, prunes it and reports MSE, MSEP on an
    independent test set and the cumulative p-value of every tree of the
    pruning sequence together with the selected tree.
    """
    tree_config = TreeConfig(max_depth, min_leaf)
    train = gen_neufeld(cfg, 0)
    test = gen_neufeld(replace(cfg, n=test_n), 1)
    seq, report = _neufeld_fit(train, delta, tree_config)

    rows = []
    for k, tree in enumerate(seq.trees):
        rows.append(
            {
                "index": k,
                "leaves": tree.n_leaves,
                "alpha": seq.alphas[k],
                "mse": mse_loss(train.y, predict_matrix(tree, train.x)),
                "msep": mse_loss(test.y, predict_matrix(tree, test.x)),
                "cum_p": seq.cum_p[k],
                "selected": k == report.selected_index,
            }
        )

    root = seq.trees[-1].root
    summary = dict(report.to_dict())
    summary["root_feature"] = None if root.is_leaf else root.feature
    summary["root_threshold"] = None if root.is_leaf else root.threshold
    summary["node_cum_p"] = seq.node_cum_p()
    config = {
        "generator": asdict(cfg),
        "delta": delta,
        "test_n": test_n,
        "max_depth": max_depth,
        "min_leaf": min_leaf,
    }
    return ExperimentResult("neufeld", rows, summary, config)


def experiment_neufeld_recovery(
    cfg: NeufeldConfig,
    reps: int = 50,
    delta: float = 0.05,
    max_depth: int = 4,
    min_leaf: int = 20,
) -> ExperimentResult:
    """Selected tree size and root split over `reps` independent datasets."""
    tree_config = TreeConfig(max_depth, min_leaf)
    rows = []
    for r in _progress(range(reps), "neufeld recovery"):
        seq, report = _neufeld_fit(gen_neufeld(cfg, r), delta, tree_config)
        root = report.tree.root
        rows.append(
            {
                "rep": r,
                "selected_index": report.selected_index,
                "selected_leaves": report.selected_leaves,
                "root_feature": -1 if root.is_leaf else root.feature,
                "root_threshold": float("nan") if root.is_leaf else root.threshold,
                "stopped_cum_p": (
                    float("nan") if report.stopped_at is None else seq.cum_p[report.stopped_at]
                ),
                "cum_p_trace": ";".join(repr(p) for p in seq.cum_p),
            }
        )

    counts = Counter(row["selected_leaves"] for row in rows)
    summary = {
        "leaves_histogram": {str(k): v for k, v in sorted(counts.items())},
        "modal_leaves": max(sorted(counts), key=lambda k: counts[k]),
    }
    config = {
        "generator": asdict(cfg),
        "reps": reps,
        "delta": delta,
        "max_depth": max_depth,
        "min_leaf": min_leaf,
    }
    return ExperimentResult("neufeld-recovery", rows, summary, config)


def _train_test_split(n: int, test_fraction: float, rng: np.random.Generator):
    perm = permutation(rng, n)
    n_test = int(round(n * test_fraction))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def _cv_select(train: NodeData, thetas, folds: int, rng, tree_config: TreeConfig) -> int:
    """Index into `thetas` with minimal k-fold cross-validated squared error."""
    fold_ids = np.array_split(permutation(rng, train.n), folds)
    errors = np.zeros(len(thetas))
    for k in range(folds):
        held = np.zeros(train.n, dtype=bool)
        held[fold_ids[k]] = True
        fold_seq = cost_complexity_sequence(fit_tree(train.subset(~held), tree_config))
        valid = train.subset(held)
        for i, theta in enumerate(thetas):
            tree = fold_seq.trees[subtree_for_alpha(fold_seq, theta)]
            errors[i] += sse_loss(valid.y, predict_matrix(tree, valid.x))
    return int(np.argmin(errors))


def experiment_cv_contrast(
    cfg: NeufeldConfig,
    folds: int = 5,
    reps: int = 500,
    deltas: Sequence[float] = (0.1, 0.05, 0.01),
    test_fraction: float = 0.2,
    max_depth: int = 4,
    min_leaf: int = 20,
    resplit: bool = True,
) -> ExperimentResult:
    """
    Contrasts cross-validated cost-complexity selection with the p-value rule.

    Every replication splits one Neufeld dataset into train and test parts
    (a fresh random split when `resplit`, otherwise one fixed split), selects
    the cost-complexity parameter by k-fold CV over the alpha grid of the
    training pruning sequence and records the selected size and test RMSE,
    alongside the p-value selection for every delta on the same split.
    """
    if folds < 2:
        raise ValueError(f"folds must be >= 2. Got {folds}")
    tree_config = TreeConfig(max_depth, min_leaf)
    data = gen_neufeld(cfg, 0)
    fixed_split = _train_test_split(data.n, test_fraction, substream(cfg.seed, 2))

    rows = []
    for r in _progress(range(reps), "cv contrast"):
        rng = substream(cfg.seed, 1, r)
        train_idx, test_idx = (
            _train_test_split(data.n, test_fraction, rng) if resplit else fixed_split
        )
        train, test = data.subset(train_idx), data.subset(test_idx)

        seq = cost_complexity_sequence(fit_tree(train, tree_config))
        best = _cv_select(train, seq.alphas, folds, rng, tree_config)
        tree = seq.trees[best]
        rows.append(
            {
                "rep": r,
                "method": "cv",
                "parameter": seq.alphas[best],
                "leaves": tree.n_leaves,
                "rmse": rmse_loss(test.y, predict_matrix(tree, test.x)),
            }
        )
        for delta in deltas:
            report = select(seq, StopConfig(delta))
            rows.append(
                {
                    "rep": r,
                    "method": f"pvalue:{delta:g}",
                    "parameter": delta,
                    "leaves": report.selected_leaves,
                    "rmse": rmse_loss(test.y, predict_matrix(report.tree, test.x)),
                }
            )

    summary = {}
    for method in ["cv"] + [f"pvalue:{delta:g}" for delta in deltas]:
        picked = [row for row in rows if row["method"] == method]
        counts = Counter(row["leaves"] for row in picked)
        summary[method] = {
            "leaves_histogram": {str(k): v for k, v in sorted(counts.items())},
            "distinct_sizes": len(counts),
            "mean_rmse": float(np.mean([row["rmse"] for row in picked])),
        }
    config = {
        "generator": asdict(cfg),
        "folds": folds,
        "reps": reps,
        "deltas": list(deltas),
        "test_fraction": test_fraction,
        "max_depth": max_depth,
        "min_leaf": min_leaf,
        "resplit": resplit,
    }
    return ExperimentResult("cv-contrast", rows, summary, config)


def experiment_penalty_sweep(
    n: int = 50, reps: int = 500, eps: float = 0.05, d: int = 1, seed: int = 0
) -> ExperimentResult:
    """
    Acceptance of the optimal split of null nodes by the p-value, C_p and BIC
    comparators.
    """
    cfg = NullConfig(n=n, d=d, seed=seed)
    kinds = list(PenaltyKind)
    rows = []
    for r in _progress(range(reps), "penalty sweep"):
        cand = best_split(gen_null(cfg, r), 1)
        row = {"rep": r, "u_scaled": 0.0 if isinstance(cand, NoSplit) else cand.u_scaled}
        for kind in kinds:
            row[kind.value] = (
                False if isinstance(cand, NoSplit) else accept_candidate(cand, kind, eps)
            )
        rows.append(row)

    rates = {kind.value: float(np.mean([row[kind.value] for row in rows])) for kind in kinds}
    summary = {
        "acceptance_rate": rates,
        "u_eps": critical_value(eps, PValueParams(n, d)),
        "cp_superset": all(row["cp"] or not row["pvalue"] for row in rows),
    }
    config = {"n": n, "reps": reps, "eps": eps, "d": d, "seed": seed}
    return ExperimentResult("penalty", rows, summary, config)


def experiment_boosting(
    data: NodeData,
    deltas: Sequence[float] = (0.1, 0.05, 0.01),
    gbm_iters: int = 100,
    learning_rate: float = 0.1,
    max_depth: int = 3,
    min_leaf: int = 20,
    test_fraction: float = 0.2,
    seed: int = 0,
    max_iters: int = 10_000,
) -> ExperimentResult:
    """
    Train/test RMSE per boosting iteration for p-value stopped boosting at
    each delta and for fixed-iteration boosting with full grown trees.
    """
    train_idx, test_idx = _train_test_split(data.n, test_fraction, substream(seed, 0))
    train, test = data.subset(train_idx), data.subset(test_idx)

    methods = {
        f"pvalue:{delta:g}": BoostConfig(learning_rate, max_depth, min_leaf, delta, max_iters)
        for delta in deltas
    }
    methods["gbm"] = gbm_config(gbm_iters, learning_rate, max_depth, min_leaf)

    rows, summary = [], {}
    for method, config in methods.items():
        model = boost_fit(train, config, test)
        for record in model.history:
            if record.accepted:
                rows.append(
                    {
                        "method": method,
                        "iteration": record.iteration,
                        "train_rmse": record.train_rmse,
                        "test_rmse": record.test_rmse,
                        "leaves": record.leaves,
                    }
                )
        accepted = [record for record in model.history if record.accepted]
        summary[method] = {
            "iterations": len(model.trees),
            "stop_reason": model.stop_reason.value,
            "final_test_rmse": (
                accepted[-1].test_rmse if accepted else rmse_loss(test.y, np.full(test.n, model.base))
            ),
        }

    config = {
        "n": data.n,
        "d": data.d,
        "deltas": list(deltas),
        "gbm_iters": gbm_iters,
        "learning_rate": learning_rate,
        "max_depth": max_depth,
        "min_leaf": min_leaf,
        "test_fraction": test_fraction,
        "seed": seed,
        "max_iters": max_iters,
    }
    return ExperimentResult("boosting", rows, summary, config)
