"""CSV dataset loading, label encoding, scaling, shuffling and k-fold splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class DatasetError(ValueError):
    """A dataset file could not be parsed into a valid dataset."""


def _read_only(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """An in-memory binary classification dataset.

    Rows of ``features`` align with ``labels``; labels are already
    encoded to {0, 1}. Instances are immutable after construction and
    safe to share across concurrent evaluators.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DatasetError("features must be a 2-d matrix")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DatasetError("labels length must equal the feature row count")
        if features.shape[0] == 0 or features.shape[1] == 0:
            raise DatasetError("dataset must have at least one row and one attribute")
        if not np.isfinite(features).all():
            raise DatasetError("features contain non-finite values")
        if not np.isin(labels, (0, 1)).all():
            raise DatasetError("labels must all be 0 or 1")
        object.__setattr__(self, "features", _read_only(features))
        object.__setattr__(self, "labels", _read_only(labels))

    @property
    def instance_count(self) -> int:
        return int(self.features.shape[0])

    @property
    def attribute_count(self) -> int:
        return int(self.features.shape[1])


@dataclass(frozen=True, eq=False)
class FoldSplit:
    """Disjoint index folds covering every instance exactly once."""

    k: int
    folds: tuple[np.ndarray, ...]
    seed: int

    def __post_init__(self) -> None:
        folds = tuple(_read_only(np.asarray(f, dtype=np.int64)) for f in self.folds)
        object.__setattr__(self, "folds", folds)
        if self.k != len(folds):
            raise ValueError("k must equal the number of folds")
        all_idx = np.concatenate(folds) if folds else np.array([], dtype=np.int64)
        if len(np.unique(all_idx)) != all_idx.size:
            raise ValueError("folds overlap")
        sizes = [f.size for f in folds]
        if sizes and max(sizes) - min(sizes) > 1:
            raise ValueError("fold sizes differ by more than 1")

    @property
    def instance_count(self) -> int:
        return int(sum(f.size for f in self.folds))

    def train_indices(self, fold: int) -> np.ndarray:
        """All instance indices outside the given fold."""
        others = [f for i, f in enumerate(self.folds) if i != fold]
        return np.concatenate(others)


def _parse_float(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def _looks_like_header(row: Sequence[str], label_idx: int) -> bool:
    # A first row is a header only when every feature cell fails to parse
    # as a number; the label cell is excluded because string labels are
    # data. A partially numeric first row is treated as data so that a
    # corrupt cell surfaces as an error instead of being skipped.
    return all(
        _parse_float(cell) is None for i, cell in enumerate(row) if i != label_idx
    )


def load_csv(
    path: str | Path,
    label_column: int | str | None = None,
    label_mapping: Mapping[str, int] | None = None,
    name: str | None = None,
) -> Dataset:
    """Load a comma-separated dataset and encode its labels to {0, 1}.

    ``label_column`` may be a column index, a header name, or None for
    the last column. ``label_mapping`` maps raw label strings to 0/1;
    when omitted, labels must already be the literals "0"/"1". A header
    row is auto-detected from non-numeric feature cells in the first row.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [
            [cell.strip() for cell in row]
            for row in csv.reader(fh)
            if any(cell.strip() for cell in row)
        ]
    if not rows:
        raise DatasetError(f"no data rows in {path}")

    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DatasetError(f"ragged row {i} in {path}: {len(row)} != {width} cells")
    if width < 2:
        raise DatasetError("need at least one feature column and one label column")

    if isinstance(label_column, str):
        header, data = rows[0], rows[1:]
        if label_column not in header:
            raise DatasetError(f"label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
    else:
        label_idx = width - 1 if label_column is None else label_column
        if label_idx < 0:
            label_idx += width
        if not 0 <= label_idx < width:
            raise DatasetError(f"label column index {label_column} out of range")
        data = rows[1:] if _looks_like_header(rows[0], label_idx) else rows
    if not data:
        raise DatasetError(f"no data rows in {path}")

    mapping = {"0": 0, "1": 1} if label_mapping is None else dict(label_mapping)
    if not set(mapping.values()) <= {0, 1}:
        raise DatasetError("label mapping values must be 0 or 1")

    features = np.empty((len(data), width - 1), dtype=np.float64)
    labels = np.empty(len(data), dtype=np.int64)
    for r, row in enumerate(data):
        raw = row[label_idx]
        if raw not in mapping:
            raise DatasetError(f"unmapped label value {raw!r} on row {r}")
        labels[r] = mapping[raw]
        c = 0
        for i, cell in enumerate(row):
            if i == label_idx:
                continue
            value = _parse_float(cell)
            if value is None:
                raise DatasetError(f"non-numeric feature cell {cell!r} at row {r}, column {i}")
            if not math.isfinite(value):
                raise DatasetError(f"non-finite feature value at row {r}, column {i}")
            features[r, c] = value
            c += 1

    return Dataset(features=features, labels=labels, name=name or path.stem)


def normalize_min_max(dataset: Dataset) -> Dataset:
    """Map each feature column affinely onto [0, 1]; constant columns to 0."""
    x = dataset.features
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    keep = span > 0
    scaled = np.zeros_like(x)
    scaled[:, keep] = (x[:, keep] - lo[keep]) / span[keep]
    return Dataset(features=scaled, labels=dataset.labels.copy(), name=dataset.name)


def shuffle(dataset: Dataset, seed: int) -> Dataset:
    """Co-permute rows and labels with a deterministic permutation of `seed`."""
    perm = np.random.default_rng(seed).permutation(dataset.instance_count)
    return Dataset(
        features=dataset.features[perm],
        labels=dataset.labels[perm],
        name=dataset.name,
    )


def kfold_split(dataset: Dataset, k: int, seed: int) -> FoldSplit:
    """Partition instance indices into k balanced folds, deterministic in seed."""
    n = dataset.instance_count
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} available instances")
    perm = np.random.default_rng(seed).permutation(n)
    folds = tuple(np.array_split(perm, k))
    return FoldSplit(k=k, folds=folds, seed=seed)


def export_fold_assignments(split: FoldSplit, path: str | Path) -> None:
    """Write an audit CSV of (instance_index, fold_id) rows."""
    assignment = np.empty(split.instance_count, dtype=np.int64)
    for fold_id, idx in enumerate(split.folds):
        assignment[idx] = fold_id
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_index", "fold_id"])
        for i, fold_id in enumerate(assignment):
            writer.writerow([i, int(fold_id)])
