"""
Command-line front end.

    pvalue-cart fit --data train.csv --target y --out model.json
    pvalue-cart predict --model model.json --data features.csv
    pvalue-cart boost --data train.csv --target y --out boost.json --log boost.csv
    pvalue-cart quantile --n 50 --d 1 --eps 0.05
    pvalue-cart simulate neufeld --n 500 --seed 1 --out neufeld.csv
    pvalue-cart experiment null-cdf --n 50 --reps 10000 --seed 1 --out null.csv

Reports go to standard output as JSON, log lines and progress bars to
standard error. Exit code 2 signals a usage or input error.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

import pandas as pd

from pvalue_cart import serialization
from pvalue_cart.boosting import BoostConfig, BoostModel, boost_fit, boost_predict_matrix
from pvalue_cart.data import IngestSpec, read_dataset, write_dataset
from pvalue_cart.numerics import PValueParams, critical_value
from pvalue_cart.simlab import experiments
from pvalue_cart.simlab.generators import (
    AltConfig,
    NeufeldConfig,
    NullConfig,
    gen_alt,
    gen_neufeld,
    gen_null,
)
from pvalue_cart.stopping import StopConfig, select
from pvalue_cart.tree import (
    NestedSequence,
    TreeConfig,
    cost_complexity_sequence,
    fit_tree,
    predict_matrix,
)

logger = logging.getLogger(__name__)


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _name_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _ingest(path, target, features, delimiter):
    return read_dataset(IngestSpec(path, target, features, delimiter))


def _emit(report) -> None:
    sys.stdout.write(json.dumps(report, indent=1, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    dataset = _ingest(args.data, args.target, args.features, args.delimiter)
    config = TreeConfig(args.max_depth, args.min_leaf)
    seq = cost_complexity_sequence(fit_tree(dataset.node, config))
    report = select(seq, StopConfig(args.delta))
    logger.info(
        "selected %d leaves from a sequence of %d trees", report.selected_leaves, len(seq)
    )

    serialization.save(report.tree, args.out)
    if args.sequence:
        serialization.save(seq, args.sequence)

    out = report.to_dict()
    out.update(
        {
            "n": dataset.node.n,
            "features": dataset.feature_names,
            "leaf_counts": seq.leaf_counts,
            "model": str(args.out),
        }
    )
    _emit(out)
    return 0


def cmd_predict(args) -> int:
    model = serialization.load(args.model)
    if isinstance(model, NestedSequence):
        raise ValueError(
            f"{args.model} holds a pruning sequence; predict needs a tree or boost model"
        )
    dataset = _ingest(args.data, args.target, args.features, args.delimiter)
    if isinstance(model, BoostModel):
        predictions = boost_predict_matrix(model, dataset.x)
    else:
        predictions = predict_matrix(model, dataset.x)

    frame = pd.DataFrame({"prediction": predictions})
    frame.to_csv(args.out if args.out else sys.stdout, index=False)
    return 0


def cmd_boost(args) -> int:
    dataset = _ingest(args.data, args.target, args.features, args.delimiter)
    test = None
    if args.test:
        test = _ingest(args.test, args.target, dataset.feature_names, args.delimiter).node
    config = BoostConfig(
        learning_rate=args.learning_rate,
        max_depth=args.max_depth,
        min_leaf=args.min_leaf,
        delta=args.delta,
        max_iters=args.max_iters,
    )
    model = boost_fit(dataset.node, config, test)
    serialization.save(model, args.out)

    if args.log:
        columns = ["iteration", "train_rmse"] + (["test_rmse"] if test is not None else [])
        rows = [
            {
                **{c: getattr(record, c) for c in columns},
                "leaves": record.leaves,
                "accepted": record.accepted,
            }
            for record in model.history
        ]
        pd.DataFrame(rows, columns=columns + ["leaves", "accepted"]).to_csv(
            args.log, index=False
        )

    _emit(
        {
            "iterations": len(model.trees),
            "stop_reason": model.stop_reason.value,
            "base": model.base,
            "model": str(args.out),
        }
    )
    return 0


def cmd_quantile(args) -> int:
    u_eps = critical_value(args.eps, PValueParams(args.n, args.d))
    sys.stdout.write(f"{u_eps:.4f}\n")
    return 0


def cmd_simulate(args) -> int:
    if args.model == "null":
        node = gen_null(NullConfig(args.n, args.d, args.rho, args.mu, args.sigma, args.seed))
    elif args.model == "alt":
        cfg = AltConfig(
            n=args.n,
            d=args.d,
            j=args.j,
            xi=args.xi,
            t0=args.t0,
            mu_l=args.mu_l,
            mu_r=args.mu_r,
            sigma=args.sigma,
            rho=args.rho,
            seed=args.seed,
            eta=args.eta,
        )
        node = gen_alt(cfg)
    else:
        node = gen_neufeld(NeufeldConfig(args.n, args.a, args.b, args.sigma, args.d, args.seed))
    write_dataset(node, args.out)
    _emit({"model": args.model, "n": node.n, "d": node.d, "out": str(args.out)})
    return 0


def _run_experiment(args) -> experiments.ExperimentResult:
    name = args.experiment
    if name == "null-cdf":
        cfg = NullConfig(n=args.n, d=args.d, rho=args.rho, seed=args.seed)
        return experiments.experiment_null_cdf(cfg, args.reps, args.quantiles, args.min_leaf)
    if name == "detection":
        base = AltConfig(n=args.n_grid[0], d=args.d, rho=args.rho, seed=args.seed, eta=args.eta)
        return experiments.experiment_detection(
            base, args.n_grid, args.reps, args.eps, min_leaf=args.min_leaf
        )
    if name == "neufeld":
        cfg = NeufeldConfig(args.n, args.a, args.b, args.sigma, args.d, args.seed)
        if args.reps:
            return experiments.experiment_neufeld_recovery(
                cfg, args.reps, args.delta, args.max_depth, args.min_leaf
            )
        return experiments.experiment_neufeld(
            cfg, args.delta, args.test_n, args.max_depth, args.min_leaf
        )
    if name == "cv-contrast":
        cfg = NeufeldConfig(args.n, args.a, args.b, args.sigma, args.d, args.seed)
        return experiments.experiment_cv_contrast(
            cfg,
            folds=args.folds,
            reps=args.reps,
            deltas=args.deltas,
            test_fraction=args.test_fraction,
            max_depth=args.max_depth,
            min_leaf=args.min_leaf,
            resplit=not args.fixed_split,
        )
    if name == "penalty":
        return experiments.experiment_penalty_sweep(args.n, args.reps, args.eps, args.d, args.seed)
    dataset = _ingest(args.data, args.target, args.features, args.delimiter)
    return experiments.experiment_boosting(
        dataset.node,
        deltas=args.deltas,
        gbm_iters=args.gbm_iters,
        learning_rate=args.learning_rate,
        max_depth=args.max_depth,
        min_leaf=args.min_leaf,
        test_fraction=args.test_fraction,
        seed=args.seed,
        max_iters=args.max_iters,
    )


def cmd_experiment(args) -> int:
    result = _run_experiment(args)
    sidecar = result.save(args.out)
    report = result.sidecar()
    report["csv"] = str(args.out)
    report["json"] = str(sidecar)
    _emit(report)
    return 0


# --------------------------------------------------------------------------
# parser


def _add_ingest_args(p, target_default: Optional[str] = "y"):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--target", default=target_default, help="response column")
    p.add_argument(
        "--features", type=_name_list, default=None, help="comma separated covariate columns"
    )
    p.add_argument("--delimiter", default=",")


def _add_tree_args(p, max_depth: int):
    p.add_argument("--max-depth", type=int, default=max_depth)
    p.add_argument("--min-leaf", type=int, default=20)


def _add_out_args(p):
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="CSV output; the JSON sidecar goes next to it")


def _add_neufeld_args(p, n: int):
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--d", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvalue-cart",
        description="Regression trees and boosting with p-value based stopping.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging, default is info")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("fit", help="grow, prune and select a tree")
    _add_ingest_args(p)
    _add_tree_args(p, max_depth=4)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--out", required=True, help="model JSON")
    p.add_argument("--sequence", default=None, help="optional JSON of the pruning sequence")
    p.set_defaults(func=cmd_fit)

    p = commands.add_parser("predict", help="predict with a tree or boost model")
    _add_ingest_args(p, target_default=None)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None, help="CSV output. Default: standard output")
    p.set_defaults(func=cmd_predict)

    p = commands.add_parser("boost", help="L2 boosting with p-value selected weak learners")
    _add_ingest_args(p)
    _add_tree_args(p, max_depth=3)
    p.add_argument("--delta", type=float, default=0.05, help='accepts "inf"')
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--test", default=None, help="held-out CSV with the same columns")
    p.add_argument("--out", required=True, help="boost model JSON")
    p.add_argument("--log", default=None, help="per-iteration CSV log")
    p.set_defaults(func=cmd_boost)

    p = commands.add_parser("quantile", help="critical value u_eps of the split statistic")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.05)
    p.set_defaults(func=cmd_quantile)

    p = commands.add_parser("simulate", help="write a simulated dataset as CSV")
    p.add_argument("model", choices=["null", "alt", "neufeld"])
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--xi", type=float, default=0.0)
    p.add_argument("--t0", type=float, default=0.5)
    p.add_argument("--mu-l", type=float, default=0.0)
    p.add_argument("--mu-r", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    _add_out_args(p)
    p.set_defaults(func=cmd_simulate)

    p = commands.add_parser("experiment", help="Monte Carlo experiments")
    runs = p.add_subparsers(dest="experiment", required=True)

    e = runs.add_parser("null-cdf", help="distribution of U_max without signal")
    e.add_argument("--n", type=int, default=50)
    e.add_argument("--d", type=int, default=1)
    e.add_argument("--rho", type=float, default=0.0)
    e.add_argument("--reps", type=int, default=10_000)
    e.add_argument("--quantiles", type=_float_list, default=[0.9, 0.95, 0.99])
    e.add_argument("--min-leaf", type=int, default=1)
    _add_out_args(e)

    e = runs.add_parser("detection", help="detection fractions over a grid of n")
    e.add_argument("--n-grid", type=_int_list, default=list(experiments.DEFAULT_N_GRID))
    e.add_argument("--d", type=int, default=1)
    e.add_argument("--rho", type=float, default=0.0)
    e.add_argument("--reps", type=int, default=1000)
    e.add_argument("--eps", type=float, default=0.05)
    e.add_argument("--eta", type=float, default=None, help="use the step-size family")
    e.add_argument("--min-leaf", type=int, default=1)
    _add_out_args(e)

    e = runs.add_parser("neufeld", help="tree recovery on the three-level step function")
    _add_neufeld_args(e, n=500)
    _add_tree_args(e, max_depth=4)
    e.add_argument("--delta", type=float, default=0.05)
    e.add_argument("--test-n", type=int, default=500)
    e.add_argument("--reps", type=int, default=0, help="run the multi-seed recovery sweep")
    _add_out_args(e)

    e = runs.add_parser("cv-contrast", help="cross-validated pruning against the p-value rule")
    _add_neufeld_args(e, n=500)
    _add_tree_args(e, max_depth=4)
    e.add_argument("--folds", type=int, default=5)
    e.add_argument("--reps", type=int, default=500)
    e.add_argument("--deltas", type=_float_list, default=[0.1, 0.05, 0.01])
    e.add_argument("--test-fraction", type=float, default=0.2)
    e.add_argument("--fixed-split", action="store_true", help="one train/test split for all reps")
    _add_out_args(e)

    e = runs.add_parser("penalty", help="p-value, C_p and BIC acceptance on null nodes")
    e.add_argument("--n", type=int, default=50)
    e.add_argument("--d", type=int, default=1)
    e.add_argument("--reps", type=int, default=500)
    e.add_argument("--eps", type=float, default=0.05)
    _add_out_args(e)

    e = runs.add_parser("boosting", help="RMSE curves of p-value boosting and GBM")
    _add_ingest_args(e)
    _add_tree_args(e, max_depth=3)
    e.add_argument("--deltas", type=_float_list, default=[0.1, 0.05, 0.01])
    e.add_argument("--gbm-iters", type=int, default=100)
    e.add_argument("--learning-rate", type=float, default=0.1)
    e.add_argument("--test-fraction", type=float, default=0.2)
    e.add_argument("--max-iters", type=int, default=10_000)
    _add_out_args(e)

    p.set_defaults(func=cmd_experiment)
    return parser


def _fill_defaults(args) -> None:
    # covariate dimension of `simulate` depends on the model
    if getattr(args, "command", None) == "simulate" and args.d is None:
        args.d = 10 if args.model == "neufeld" else 1


def log_level(verbose: bool) -> int:
    return logging.DEBUG if verbose else logging.INFO


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _fill_defaults(args)
    logging.basicConfig(
        level=log_level(args.verbose),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"pvalue-cart: error: {e}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
