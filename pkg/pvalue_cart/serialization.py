"""
JSON documents for trees, nested sequences and boosted ensembles.

Reals are written with `repr` precision, which reproduces every stored
double exactly on reading.
"""
import json
from pathlib import Path
from typing import Any, Dict, Union

from pvalue_cart.boosting import BoostConfig, BoostModel, StopReason
from pvalue_cart.tree import NestedSequence, RegressionTree, TreeConfig, TreeNode


class ModelFormatError(ValueError):
    def __init__(self, message, line=None, column=None, path=None):
        location = []
        if line is not None:
            location.append(f"line {line}, column {column}")
        if path is not None:
            location.append(f"at '{path}'")
        if location:
            message = f"{message} ({'; '.join(location)})"
        super().__init__(message)
        self.line = line
        self.column = column
        self.path = path


Document = Union[RegressionTree, NestedSequence, BoostModel]


# --------------------------------------------------------------------------
# encoding


def node_to_dict(node: TreeNode) -> Dict[str, Any]:
    if node.is_leaf:
        return {"leaf": {"mean": node.mean, "n": node.n_node, "sse": node.sse}}
    return {
        "split": {
            "j": node.feature,
            "threshold": node.threshold,
            "p_value": node.p_value,
            "n": node.n_node,
            "mean": node.mean,
            "sse": node.sse,
            "left": node_to_dict(node.left),
            "right": node_to_dict(node.right),
        }
    }


def _config_to_dict(config: TreeConfig) -> Dict[str, Any]:
    return {"max_depth": config.max_depth, "min_leaf": config.min_leaf}


def tree_to_dict(tree: RegressionTree) -> Dict[str, Any]:
    return {"d": tree.d, "config": _config_to_dict(tree.config), "root": node_to_dict(tree.root)}


def sequence_to_dict(seq: NestedSequence) -> Dict[str, Any]:
    first = seq.trees[0]
    return {
        "d": first.d,
        "config": _config_to_dict(first.config),
        "roots": [node_to_dict(t.root) for t in seq.trees],
        "alphas": list(seq.alphas),
        "added_p_values": [list(p) for p in seq.added_p_values],
        "cum_p": list(seq.cum_p),
    }


def boost_to_dict(model: BoostModel) -> Dict[str, Any]:
    return {
        "base": model.base,
        "learning_rate": model.learning_rate,
        "stop_reason": model.stop_reason.value,
        "d": model.d,
        "config": {
            "learning_rate": model.config.learning_rate,
            "max_depth": model.config.max_depth,
            "min_leaf": model.config.min_leaf,
            "delta": model.config.delta,
            "max_iters": model.config.max_iters,
        },
        "trees": [tree_to_dict(t) for t in model.trees],
    }


def to_dict(obj: Document) -> Dict[str, Any]:
    if isinstance(obj, RegressionTree):
        return tree_to_dict(obj)
    if isinstance(obj, NestedSequence):
        return sequence_to_dict(obj)
    if isinstance(obj, BoostModel):
        return boost_to_dict(obj)
    raise TypeError(f"cannot serialize object of type {type(obj)}")


def dumps(obj: Document) -> str:
    # infinite delta is written as the JSON extension token Infinity
    return json.dumps(to_dict(obj), indent=1) + "\n"


def save(obj: Document, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


# --------------------------------------------------------------------------
# decoding


def _get(doc: Dict[str, Any], key: str, path: str, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise ModelFormatError(f"missing key '{key}'", path=path)
    value = doc[key]
    if kind is not None:
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or isinstance(value, bool):
            raise ModelFormatError(
                f"key '{key}' must be {kind.__name__}, got {type(value).__name__}",
                path=path,
            )
    return value


def _get_or(doc: Dict[str, Any], key: str, path: str, kind, default):
    return _get(doc, key, path, kind) if key in doc else default


def node_from_dict(doc: Dict[str, Any], path: str = "root") -> TreeNode:
    if isinstance(doc, dict) and "leaf" in doc:
        body = doc["leaf"]
        where = f"{path}.leaf"
        mean = _get(body, "mean", where, float)
        n = _get(body, "n", where, int)
        return TreeNode(mean=mean, n_node=n, sse=_get_or(body, "sse", where, float, 0.0))
    if isinstance(doc, dict) and "split" in doc:
        body = doc["split"]
        where = f"{path}.split"
        left = node_from_dict(_get(body, "left", where), f"{where}.left")
        right = node_from_dict(_get(body, "right", where), f"{where}.right")
        n = _get(body, "n", where, int)
        if n != left.n_node + right.n_node:
            raise ModelFormatError("node size differs from the sum of its children", path=where)
        return TreeNode(
            mean=_get(body, "mean", where, float),
            n_node=n,
            sse=_get_or(body, "sse", where, float, 0.0),
            feature=_get(body, "j", where, int),
            threshold=_get(body, "threshold", where, float),
            p_value=_get(body, "p_value", where, float),
            left=left,
            right=right,
        )
    raise ModelFormatError("node must be an object with key 'leaf' or 'split'", path=path)


def _config_from_dict(doc: Dict[str, Any]) -> TreeConfig:
    if not isinstance(doc, dict):
        raise ModelFormatError("config must be an object", path="config")
    defaults = TreeConfig()
    return TreeConfig(
        max_depth=_get_or(doc, "max_depth", "config", int, defaults.max_depth),
        min_leaf=_get_or(doc, "min_leaf", "config", int, defaults.min_leaf),
    )


def tree_from_dict(doc: Dict[str, Any], path: str = "") -> RegressionTree:
    prefix = f"{path}." if path else ""
    return RegressionTree(
        root=node_from_dict(_get(doc, "root", path or "."), f"{prefix}root"),
        d=_get(doc, "d", path or ".", int),
        config=_config_from_dict(doc.get("config", {})),
    )


def sequence_from_dict(doc: Dict[str, Any]) -> NestedSequence:
    d = _get(doc, "d", ".", int)
    config = _config_from_dict(doc.get("config", {}))
    roots = _get(doc, "roots", ".", list)
    cum_p = [float(v) for v in _get(doc, "cum_p", ".", list)]
    if len(cum_p) != len(roots):
        raise ModelFormatError("'cum_p' and 'roots' differ in length", path="cum_p")
    trees = [
        RegressionTree(root=node_from_dict(r, f"roots[{i}]"), d=d, config=config)
        for i, r in enumerate(roots)
    ]
    alphas = [float(v) for v in doc.get("alphas", [0.0] * len(trees))]
    added = [[float(p) for p in step] for step in doc.get("added_p_values", [[]] * len(trees))]
    return NestedSequence(trees=trees, alphas=alphas, added_p_values=added, cum_p=cum_p)


def boost_from_dict(doc: Dict[str, Any]) -> BoostModel:
    trees = [
        tree_from_dict(t, f"trees[{i}]") for i, t in enumerate(_get(doc, "trees", ".", list))
    ]
    reason = _get(doc, "stop_reason", ".", str)
    try:
        stop_reason = StopReason(reason)
    except ValueError:
        raise ModelFormatError(f"unknown stop_reason '{reason}'", path="stop_reason") from None
    learning_rate = _get(doc, "learning_rate", ".", float)
    config_doc = doc.get("config", {})
    if not isinstance(config_doc, dict):
        raise ModelFormatError("config must be an object", path="config")
    defaults = BoostConfig()
    config = BoostConfig(
        learning_rate=learning_rate,
        max_depth=_get_or(config_doc, "max_depth", "config", int, defaults.max_depth),
        min_leaf=_get_or(config_doc, "min_leaf", "config", int, defaults.min_leaf),
        delta=_get_or(config_doc, "delta", "config", float, defaults.delta),
        max_iters=_get_or(config_doc, "max_iters", "config", int, defaults.max_iters),
    )
    d = doc.get("d", trees[0].d if trees else None)
    return BoostModel(
        base=_get(doc, "base", ".", float),
        trees=trees,
        learning_rate=learning_rate,
        stop_reason=stop_reason,
        d=d,
        config=config,
    )


def from_dict(doc: Dict[str, Any]) -> Document:
    if not isinstance(doc, dict):
        raise ModelFormatError("document must be a JSON object")
    if "base" in doc and "trees" in doc:
        return boost_from_dict(doc)
    if "roots" in doc:
        return sequence_from_dict(doc)
    return tree_from_dict(doc)


def loads(text: str) -> Document:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(e.msg, line=e.lineno, column=e.colno) from None
    return from_dict(doc)


def load(path) -> Document:
    return loads(Path(path).read_text(encoding="utf-8"))
