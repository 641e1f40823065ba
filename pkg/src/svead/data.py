"""CSV ingestion, feature scaling, and leakage-safe splits / CV folds."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassAbsent,
    DegenerateSplit,
    DimensionMismatch,
    EmptyDataset,
    MissingFile,
    MissingLabelColumn,
    NonBinaryLabel,
    NonNumericCell,
    TooFewPerClass,
)


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with binary labels and stable row ids."""

    features: np.ndarray          # (n, d) float64
    labels: np.ndarray            # (n,) int, values in {0, 1}
    feature_names: tuple[str, ...]
    row_ids: np.ndarray           # (n,) int, unique

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        row_ids = np.asarray(self.row_ids, dtype=np.int64)
        features.setflags(write=False)
        labels.setflags(write=False)
        row_ids.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "row_ids", row_ids)
        n = features.shape[0]
        if labels.shape[0] != n or row_ids.shape[0] != n:
            raise DimensionMismatch("features/labels/row_ids length disagree")
        if len(self.feature_names) != features.shape[1]:
            raise DimensionMismatch("feature_names length != column count")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isin(labels, (0, 1))):
            raise NonBinaryLabel(int(np.flatnonzero(~np.isin(labels, (0, 1)))[0]))
        if len(np.unique(row_ids)) != n:
            raise ValueError("row_ids must be unique")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        """New Dataset keeping the given positional rows (row_ids preserved)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx],
                       self.feature_names, self.row_ids[idx])

    def with_features(self, features, feature_names) -> "Dataset":
        """Same rows/labels/ids with a replaced feature block."""
        return Dataset(np.asarray(features, dtype=np.float64), self.labels,
                       tuple(feature_names), self.row_ids)


@dataclass(frozen=True)
class ScalerParams:
    """Fitted column scaling: zscore stores (mean, sd), minmax (min, max)."""

    kind: str                      # "zscore" | "minmax"
    per_feature_a: np.ndarray
    per_feature_b: np.ndarray
    constant_columns: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("zscore", "minmax"):
            raise ValueError(f"unknown scaler kind {self.kind!r}")
        if self.per_feature_a.shape != self.per_feature_b.shape:
            raise DimensionMismatch("scaler parameter vectors disagree")


@dataclass(frozen=True)
class FoldPlan:
    """Stratified CV assignment: fold index per row_id."""

    k: int
    fold_assignment: dict          # row_id -> fold index in [0, k)
    seed: int

    def fold_row_ids(self, fold: int) -> list[int]:
        return [rid for rid, f in self.fold_assignment.items() if f == fold]


def load_csv(path, label_column) -> Dataset:
    """Parse a headed comma-separated file into a Dataset.

    Rows are numbered 0..n-1 in file order; the label column is excluded
    from the feature block.
    """
    if not os.path.isfile(path):
        raise MissingFile(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(path) from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise MissingLabelColumn(label_column)
        label_idx = header.index(label_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != label_idx)
        rows, labels = [], []
        for r, record in enumerate(reader):
            if not record:
                continue
            values = []
            for c, cell in enumerate(record):
                cell = cell.strip()
                if c == label_idx:
                    if cell not in ("0", "1"):
                        # accept float-formatted 0/1 as the public dataset uses "0"/"1"
                        try:
                            lv = float(cell)
                        except ValueError:
                            raise NonBinaryLabel(r) from None
                        if lv not in (0.0, 1.0):
                            raise NonBinaryLabel(r)
                        labels.append(int(lv))
                    else:
                        labels.append(int(cell))
                else:
                    try:
                        v = float(cell)
                    except ValueError:
                        raise NonNumericCell(r, c) from None
                    if not np.isfinite(v):
                        raise NonNumericCell(r, c)
                    values.append(v)
            rows.append(values)
    if not rows:
        raise EmptyDataset(path)
    features = np.array(rows, dtype=np.float64)
    return Dataset(features, np.array(labels), feature_names,
                   np.arange(len(rows)))


def fit_scaler(train: Dataset, kind: str) -> ScalerParams:
    """Fit per-column scaling parameters on training rows only.

    zscore uses the population (1/n) standard deviation; constant columns
    are flagged rather than rejected and later map to all zeros.
    """
    x = train.features
    if kind == "zscore":
        mean = x.mean(axis=0)
        sd = x.std(axis=0)          # population sd
        constant = tuple(int(i) for i in np.flatnonzero(sd == 0.0))
        return ScalerParams("zscore", mean, sd, constant)
    if kind == "minmax":
        lo = x.min(axis=0)
        hi = x.max(axis=0)
        constant = tuple(int(i) for i in np.flatnonzero(hi == lo))
        return ScalerParams("minmax", lo, hi, constant)
    raise ValueError(f"unknown scaler kind {kind!r}")


def apply_scaler(params: ScalerParams, data: Dataset) -> Dataset:
    """Apply fitted parameters unchanged; never refits, never clips."""
    if data.n_features != params.per_feature_a.shape[0]:
        raise DimensionMismatch("apply data has a different column count")
    x = data.features
    if params.kind == "zscore":
        safe = np.where(params.per_feature_b == 0.0, 1.0, params.per_feature_b)
        out = (x - params.per_feature_a) / safe
        if params.constant_columns:
            out[:, list(params.constant_columns)] = 0.0
    else:
        span = params.per_feature_b - params.per_feature_a
        safe = np.where(span == 0.0, 1.0, span)
        out = (x - params.per_feature_a) / safe
        if params.constant_columns:
            out[:, list(params.constant_columns)] = 0.0
    return data.with_features(out, data.feature_names)


def train_test_split(data: Dataset, test_fraction: float, stratified: bool,
                     seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive row partition; stratified mode preserves the
    class ratio within one sample per side. Deterministic for a fixed seed."""
    if not 0.0 < test_fraction < 1.0:
        raise DegenerateSplit(f"test_fraction {test_fraction} not in (0,1)")
    n = data.n_rows
    n_test = int(round(n * test_fraction))
    if n_test == 0 or n_test == n:
        raise DegenerateSplit("a split side would be empty")
    rng = np.random.default_rng(seed)
    if stratified:
        test_idx = []
        for cls in (0, 1):
            members = np.flatnonzero(data.labels == cls)
            if members.size == 0:
                raise ClassAbsent(f"class {cls} missing from input")
            take = int(round(members.size * test_fraction))
            take = min(max(take, 0), members.size)
            members = members[rng.permutation(members.size)]
            test_idx.extend(members[:take].tolist())
        test_idx = np.sort(np.array(test_idx, dtype=np.int64))
    else:
        perm = rng.permutation(n)
        test_idx = np.sort(perm[:n_test])
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    if mask.all() or not mask.any():
        raise DegenerateSplit("a split side would be empty")
    return data.subset(np.flatnonzero(~mask)), data.subset(np.flatnonzero(mask))


def stratified_kfold(data: Dataset, k: int, seed: int) -> FoldPlan:
    """Shuffle each class independently, deal round-robin into k folds."""
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    assignment = {}
    deal = 0                       # carried across classes to balance sizes
    for cls in (0, 1):
        members = np.flatnonzero(data.labels == cls)
        if members.size < k:
            raise TooFewPerClass(
                f"class {cls} has {members.size} members, need >= {k}")
        members = members[rng.permutation(members.size)]
        for idx in members:
            assignment[int(data.row_ids[idx])] = deal % k
            deal += 1
    return FoldPlan(k, assignment, seed)


def fold_split(data: Dataset, plan: FoldPlan, fold: int) -> tuple[Dataset, Dataset]:
    """(train, validation) Datasets for one fold of a plan."""
    fold_of = np.array([plan.fold_assignment[int(r)] for r in data.row_ids])
    val = np.flatnonzero(fold_of == fold)
    train = np.flatnonzero(fold_of != fold)
    return data.subset(train), data.subset(val)
