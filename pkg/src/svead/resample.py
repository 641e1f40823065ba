"""Training-fold rebalancing: RUS, ROS, SMOTE, Tomek-link cleaning, SMOTETomek.

All operations take an already-scaled training Dataset and are deterministic
for a fixed seed. Distances are plain Euclidean on the features as given.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import MinorityTooSmall, SingleClass


@dataclass(frozen=True)
class ResampleSpec:
    method: str = "none"            # none | rus | ros | smote | smote_tomek
    smote_k: int = 5
    target_ratio: float = 1.0       # minority/majority after resampling
    seed: int = 0

    def __post_init__(self):
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ValueError("target_ratio must be in (0, 1]")
        if self.method not in ("none", "rus", "ros", "smote", "smote_tomek"):
            raise ValueError(f"unknown resample method {self.method!r}")


@dataclass(frozen=True)
class TomekLink:
    majority_id: int
    minority_id: int


def _class_indices(data: Dataset):
    pos = np.flatnonzero(data.labels == 1)
    neg = np.flatnonzero(data.labels == 0)
    if pos.size == 0 or neg.size == 0:
        raise SingleClass("both classes must be present")
    if pos.size <= neg.size:
        return pos, neg             # (minority, majority)
    return neg, pos


def random_undersample(train: Dataset, seed: int) -> Dataset:
    """Drop uniformly-chosen majority rows until the classes balance."""
    minority, majority = _class_indices(train)
    rng = np.random.default_rng(seed)
    keep_major = majority[rng.permutation(majority.size)[:minority.size]]
    keep = np.sort(np.concatenate([minority, keep_major]))
    return train.subset(keep)


def random_oversample(train: Dataset, seed: int) -> Dataset:
    """Duplicate uniformly-chosen minority rows until the classes balance.

    Synthesized duplicates get fresh row_ids above the current maximum.
    """
    minority, majority = _class_indices(train)
    n_new = majority.size - minority.size
    if n_new == 0:
        return train
    rng = np.random.default_rng(seed)
    picks = minority[rng.integers(0, minority.size, size=n_new)]
    next_id = int(train.row_ids.max()) + 1
    features = np.vstack([train.features, train.features[picks]])
    labels = np.concatenate([train.labels, train.labels[picks]])
    row_ids = np.concatenate([train.row_ids,
                              np.arange(next_id, next_id + n_new)])
    return Dataset(features, labels, train.feature_names, row_ids)


def _minority_neighbors(minority_x: np.ndarray, k: int) -> np.ndarray:
    """Index of each minority row's k nearest minority rows (self excluded)."""
    diff = minority_x[:, None, :] - minority_x[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k]


def smote(train: Dataset, spec: ResampleSpec) -> Dataset:
    """Append synthetic minority rows interpolated toward minority neighbors.

    Each synthetic row is s + g * (nn - s) with g uniform in [0, 1], s a
    uniformly chosen minority row and nn one of its smote_k minority nearest
    neighbors. Originals are untouched; synthetic rows get fresh row_ids.
    """
    minority, majority = _class_indices(train)
    if minority.size < 2:
        raise MinorityTooSmall("SMOTE needs >= 2 minority rows")
    target_minority = int(np.ceil(spec.target_ratio * majority.size))
    n_new = max(0, target_minority - minority.size)
    if n_new == 0:
        return train
    k = spec.smote_k
    if k > minority.size - 1:
        warnings.warn(
            f"smote_k={k} clamped to {minority.size - 1} (minority size)")
        k = minority.size - 1
    rng = np.random.default_rng(spec.seed)
    minority_x = train.features[minority]
    neighbors = _minority_neighbors(minority_x, k)
    seeds = rng.integers(0, minority.size, size=n_new)
    picks = rng.integers(0, k, size=n_new)
    gaps = rng.uniform(0.0, 1.0, size=n_new)
    s = minority_x[seeds]
    nn = minority_x[neighbors[seeds, picks]]
    synthetic = s + gaps[:, None] * (nn - s)
    minority_label = int(train.labels[minority[0]])
    next_id = int(train.row_ids.max()) + 1
    features = np.vstack([train.features, synthetic])
    labels = np.concatenate([train.labels,
                             np.full(n_new, minority_label, dtype=np.int64)])
    row_ids = np.concatenate([train.row_ids,
                              np.arange(next_id, next_id + n_new)])
    return Dataset(features, labels, train.feature_names, row_ids)


def find_tomek_links(data: Dataset) -> list[TomekLink]:
    """Cross-class pairs that are each other's 1-nearest-neighbor.

    Nearest-neighbor ties resolve to the lowest row_id, so duplicate points
    still produce a unique neighbor per row.
    """
    pos = np.flatnonzero(data.labels == 1)
    neg = np.flatnonzero(data.labels == 0)
    if pos.size == 0 or neg.size == 0:
        raise SingleClass("both classes must be present")
    x = data.features
    n = data.n_rows
    # rows ordered by row_id so argmin's first-hit tie-break matches the rule
    order = np.argsort(data.row_ids, kind="stable")
    xo = x[order]
    nn_of = np.empty(n, dtype=np.int64)
    chunk = 512
    for start in range(0, n, chunk):
        block = xo[start:start + chunk]
        d2 = ((block[:, None, :] - xo[None, :, :]) ** 2).sum(axis=2)
        for i in range(block.shape[0]):
            d2[i, start + i] = np.inf
        nn_of[start:start + chunk] = np.argmin(d2, axis=1)
    labels_o = data.labels[order]
    ids_o = data.row_ids[order]
    links = []
    for i in range(n):
        j = nn_of[i]
        if j > i and nn_of[j] == i and labels_o[i] != labels_o[j]:
            if labels_o[i] == 1:
                links.append(TomekLink(int(ids_o[j]), int(ids_o[i])))
            else:
                links.append(TomekLink(int(ids_o[i]), int(ids_o[j])))
    return links


def smote_tomek(train: Dataset, spec: ResampleSpec) -> Dataset:
    """SMOTE, then drop the majority member of every Tomek link found on the
    oversampled set (single cleaning pass)."""
    oversampled = smote(train, spec)
    links = find_tomek_links(oversampled)
    if not links:
        return oversampled
    drop = {link.majority_id for link in links}
    keep = np.flatnonzero(~np.isin(oversampled.row_ids, list(drop)))
    return oversampled.subset(keep)


def apply_resample(train: Dataset, spec: ResampleSpec) -> Dataset:
    """Dispatch on spec.method; `none` is the identity."""
    if spec.method == "none":
        return train
    if spec.method == "rus":
        return random_undersample(train, spec.seed)
    if spec.method == "ros":
        return random_oversample(train, spec.seed)
    if spec.method == "smote":
        return smote(train, spec)
    if spec.method == "smote_tomek":
        return smote_tomek(train, spec)
    raise ValueError(f"unknown resample method {spec.method!r}")
