from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from pvalue_cart.splitfinder import NodeData


class IngestError(ValueError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


@dataclass(frozen=True)
class IngestSpec:
    """
    Parameters
    ----------
    path: str or Path
        CSV file with a header row.

    target: str, optional
        name of the response column. Not needed when reading features only.

    features: list of str, optional
        covariate columns. Default: all columns except the target.

    delimiter: str
        field separator. Default: ","
    """

    path: Path
    target: Optional[str] = None
    features: Optional[Sequence[str]] = None
    delimiter: str = ","


@dataclass(frozen=True, eq=False)
class Dataset:
    """NodeData plus the column names it was read from."""

    node: NodeData
    feature_names: List[str]
    target_name: Optional[str] = None

    @property
    def y(self) -> np.ndarray:
        return self.node.y

    @property
    def x(self) -> np.ndarray:
        return self.node.x


def _read_frame(spec: IngestSpec) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            spec.path,
            sep=spec.delimiter,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise IngestError(f"{spec.path} is empty") from None
    except pd.errors.ParserError as e:
        raise IngestError(f"cannot parse {spec.path}: {e}") from None
    if frame.shape[0] == 0:
        raise IngestError(f"{spec.path} has a header but no data rows")
    return frame


def _to_float(frame: pd.DataFrame, columns: Sequence[str]) -> np.ndarray:
    out = np.empty((frame.shape[0], len(columns)))
    for k, name in enumerate(columns):
        raw = frame[name].str.strip()
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(values)
        if bad.any():
            i = int(np.argmax(bad))
            # data row numbering starts at 1 below the header
            raise IngestError(
                f"cell '{raw.iloc[i]}' is not a finite real", row=i + 1, column=name
            )
        out[:, k] = values
    return out


def read_dataset(spec: IngestSpec) -> Dataset:
    """
    Reads a CSV file into a Dataset.

    Raises
    ------
    IngestError
        on missing columns, empty files and cells that do not parse as
        finite reals; the message names row and column.
    """
    frame = _read_frame(spec)
    columns = list(frame.columns)

    if spec.target is not None and spec.target not in columns:
        raise IngestError(f"target column '{spec.target}' not found", column=spec.target)
    if spec.features is None:
        features = [c for c in columns if c != spec.target]
    else:
        features = list(spec.features)
        for name in features:
            if name not in columns:
                raise IngestError(f"feature column '{name}' not found", column=name)
    if not features:
        raise IngestError("no feature columns")

    x = _to_float(frame, features)
    if spec.target is None:
        y = np.zeros(x.shape[0])
    else:
        y = _to_float(frame, [spec.target])[:, 0]
    return Dataset(node=NodeData(y, x), feature_names=features, target_name=spec.target)


def dataset_frame(node: NodeData, feature_names=None, target: str = "y") -> pd.DataFrame:
    names = feature_names or [f"x{j + 1}" for j in range(node.d)]
    frame = pd.DataFrame(node.x, columns=names)
    frame.insert(0, target, node.y)
    return frame


def write_dataset(node: NodeData, path, feature_names=None, target: str = "y") -> None:
    dataset_frame(node, feature_names, target).to_csv(path, index=False)
