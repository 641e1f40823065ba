"""Model-agnostic explainability: exact and permutation-sampled Shapley
attributions, weighted ensemble aggregation, permutation importance, and
ICE / partial dependence curves.

All operations take a prediction function mapping an (n, d) feature matrix
to an (n,) vector of real-valued outputs, so any trained pipeline stage can
be explained without the explainer knowing its internals.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .data import Dataset
from .errors import (
    LengthMismatch,
    NonFinitePrediction,
    TooManyFeatures,
    UnknownFeature,
    ZeroWeights,
)
from .metrics import pr_auc, roc_auc


@dataclass(frozen=True)
class Attribution:
    row_id: int
    phi: np.ndarray
    baseline_value: float
    prediction: float
    efficiency_residual: float


@dataclass(frozen=True)
class Background:
    reference_rows: np.ndarray        # (r, d)
    reduction: str = "per_row_average"   # or "single_row_mean"

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.reference_rows, dtype=np.float64))
        object.__setattr__(self, "reference_rows", rows)
        if rows.shape[0] == 0:
            raise ValueError("background needs at least one row")
        if self.reduction not in ("per_row_average", "single_row_mean"):
            raise ValueError(f"unknown reduction {self.reduction!r}")

    def effective_rows(self) -> np.ndarray:
        if self.reduction == "single_row_mean":
            return self.reference_rows.mean(axis=0, keepdims=True)
        return self.reference_rows


@dataclass(frozen=True)
class ImportanceRanking:
    entries: tuple                    # of (feature_name, mean_drop, sd_drop)


@dataclass(frozen=True)
class IceResult:
    feature_name: str
    grid: np.ndarray
    curves: np.ndarray                # (instances, grid points)
    pdp: np.ndarray


def _coalition_values(predict_fn, x, background: Background):
    """Value v(T) for every coalition mask: the prediction with coalition
    features taken from x and the rest from the background rows (averaged
    over rows)."""
    refs = background.effective_rows()
    d = x.shape[0]
    r = refs.shape[0]
    n_masks = 1 << d
    composites = np.empty((n_masks * r, d))
    for mask in range(n_masks):
        take = np.array([(mask >> i) & 1 for i in range(d)], dtype=bool)
        block = np.where(take, x, refs)
        composites[mask * r:(mask + 1) * r] = block
    preds = np.asarray(predict_fn(composites), dtype=np.float64)
    if not np.all(np.isfinite(preds)):
        raise NonFinitePrediction("predict returned a non-finite value")
    return preds.reshape(n_masks, r).mean(axis=1)


def shapley_exact(predict_fn, x, background: Background,
                  feature_limit: int = 15, row_id: int = -1) -> Attribution:
    """Exact Shapley attribution by full coalition enumeration.

    phi_i sums, over every coalition T excluding i, the weighted marginal
    contribution |T|!(d-|T|-1)!/d! * (v(T+i) - v(T)); 2^d evaluations.
    """
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    if d > feature_limit:
        raise TooManyFeatures(f"{d} features exceeds limit {feature_limit}")
    v = _coalition_values(predict_fn, x, background)
    weight = np.array([factorial(t) * factorial(d - t - 1) / factorial(d)
                       for t in range(d)])
    popcount = np.array([bin(m).count("1") for m in range(1 << d)])
    phi = np.zeros(d)
    for i in range(d):
        bit = 1 << i
        without = np.flatnonzero((np.arange(1 << d) & bit) == 0)
        phi[i] = np.sum(weight[popcount[without]]
                        * (v[without | bit] - v[without]))
    baseline = float(v[0])
    prediction = float(v[-1])
    residual = float(phi.sum() + baseline - prediction)
    return Attribution(row_id, phi, baseline, prediction, residual)


def shapley_sampled(predict_fn, x, background: Background,
                    n_permutations: int, seed: int,
                    row_id: int = -1) -> Attribution:
    """Monte-Carlo Shapley: average marginal contributions along seeded
    uniform random feature permutations. Unbiased for the exact values;
    the efficiency residual is reported, never forced to zero."""
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    refs = background.effective_rows()
    r = refs.shape[0]
    rng = np.random.default_rng(seed)
    phi = np.zeros(d)
    for _ in range(n_permutations):
        perm = rng.permutation(d)
        # chain of d+1 nested coalitions, evaluated in one batch
        composites = np.empty(((d + 1) * r, d))
        current = refs.copy()
        composites[0:r] = current
        for step, feat in enumerate(perm, start=1):
            current = current.copy()
            current[:, feat] = x[feat]
            composites[step * r:(step + 1) * r] = current
        preds = np.asarray(predict_fn(composites), dtype=np.float64)
        if not np.all(np.isfinite(preds)):
            raise NonFinitePrediction("predict returned a non-finite value")
        values = preds.reshape(d + 1, r).mean(axis=1)
        phi[perm] += np.diff(values)
    phi /= n_permutations
    base_pred = np.asarray(predict_fn(
        np.vstack([refs, x.reshape(1, -1)])), dtype=np.float64)
    baseline = float(base_pred[:r].mean())
    prediction = float(base_pred[-1])
    residual = float(phi.sum() + baseline - prediction)
    return Attribution(row_id, phi, baseline, prediction, residual)


def aggregate_ensemble_shap(per_model, weights) -> Attribution:
    """Weighted elementwise average of per-model attributions; weights are
    normalized internally (the stacking meta-weights by default upstream)."""
    weights = np.asarray(weights, dtype=np.float64)
    if len(per_model) != weights.shape[0]:
        raise LengthMismatch("one weight per attribution required")
    if np.any(weights < 0) or weights.sum() == 0:
        raise ZeroWeights("weights must be nonnegative and not all zero")
    d = per_model[0].phi.shape[0]
    if any(a.phi.shape[0] != d for a in per_model):
        raise LengthMismatch("attributions disagree on feature count")
    w = weights / weights.sum()
    phi = sum(wi * a.phi for wi, a in zip(w, per_model))
    baseline = float(sum(wi * a.baseline_value for wi, a in zip(w, per_model)))
    prediction = float(sum(wi * a.prediction for wi, a in zip(w, per_model)))
    residual = float(phi.sum() + baseline - prediction)
    return Attribution(per_model[0].row_id, phi, baseline, prediction, residual)


_IMPORTANCE_METRICS = {"pr_auc": pr_auc, "roc_auc": roc_auc}


def permutation_importance(predict_fn, data: Dataset, metric: str = "pr_auc",
                           n_repeats: int = 10, seed: int = 0) -> ImportanceRanking:
    """Mean and sd of the metric drop after shuffling one column at a time,
    sorted by mean drop descending."""
    score = _IMPORTANCE_METRICS[metric]
    baseline = score(data.labels, np.asarray(predict_fn(data.features)))
    rng = np.random.default_rng(seed)
    entries = []
    for j, name in enumerate(data.feature_names):
        drops = []
        for _ in range(n_repeats):
            shuffled = data.features.copy()
            shuffled[:, j] = shuffled[rng.permutation(data.n_rows), j]
            drops.append(baseline - score(data.labels,
                                          np.asarray(predict_fn(shuffled))))
        entries.append((name, float(np.mean(drops)), float(np.std(drops))))
    entries.sort(key=lambda e: -e[1])
    return ImportanceRanking(tuple(entries))


def ice_curves(predict_fn, data: Dataset, feature: str, grid_size: int = 20,
               grid_kind: str = "quantile") -> IceResult:
    """Per-instance prediction curves as one feature sweeps a grid; the
    partial dependence is the columnwise mean."""
    if feature not in data.feature_names:
        raise UnknownFeature(feature)
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    j = data.feature_names.index(feature)
    column = data.features[:, j]
    if grid_kind == "quantile":
        grid = np.quantile(column, np.linspace(0.0, 1.0, grid_size))
        grid = np.unique(grid)
    elif grid_kind == "linear":
        grid = np.linspace(column.min(), column.max(), grid_size)
    else:
        raise ValueError(f"unknown grid kind {grid_kind!r}")
    curves = np.empty((data.n_rows, grid.shape[0]))
    for g, value in enumerate(grid):
        modified = data.features.copy()
        modified[:, j] = value
        curves[:, g] = np.asarray(predict_fn(modified))
    return IceResult(feature, grid, curves, curves.mean(axis=0))


# --- delimited emitters (column orders are part of the interface) -------

def write_shap_csv(attributions, feature_names, path) -> None:
    with open(path, "w") as fh:
        fh.write("row_id,feature,phi\n")
        for a in attributions:
            for name, phi in zip(feature_names, a.phi):
                fh.write(f"{a.row_id},{name},{float(phi)!r}\n")


def write_pip_csv(ranking: ImportanceRanking, path) -> None:
    with open(path, "w") as fh:
        fh.write("feature,mean_drop,sd_drop\n")
        for name, mean_drop, sd_drop in ranking.entries:
            fh.write(f"{name},{mean_drop!r},{sd_drop!r}\n")


def write_ice_csv(result: IceResult, row_ids, path) -> None:
    with open(path, "w") as fh:
        fh.write("row_id,grid_value,prediction\n")
        for i, rid in enumerate(row_ids):
            for g, value in enumerate(result.grid):
                fh.write(f"{int(rid)},{float(value)!r},"
                         f"{float(result.curves[i, g])!r}\n")
