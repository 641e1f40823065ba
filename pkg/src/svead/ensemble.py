"""Classifier combination: hard/soft voting and stacked generalization with
leakage-free out-of-fold meta-features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, FoldPlan, fold_split, stratified_kfold
from .errors import DimensionMismatch, InvalidHyperparameter
from .learners import Classifier, LearnerSpec, fit, predict_proba


@dataclass(frozen=True)
class VotingEnsemble:
    models: tuple            # of Classifier
    mode: str                # "hard" | "soft"

    def __post_init__(self):
        if len(self.models) < 2:
            raise ValueError("voting needs at least 2 models")
        if self.mode not in ("hard", "soft"):
            raise ValueError(f"unknown voting mode {self.mode!r}")


@dataclass(frozen=True)
class StackedEnsemble:
    base_models: tuple       # trained on the full training set, used at inference
    meta_model: object       # Classifier (logistic) or linear coefficient dict
    meta_link: str           # "logistic" | "identity"
    fold_plan: FoldPlan
    base_specs: tuple


def out_of_fold_features(base_specs, train: Dataset, plan: FoldPlan):
    """n x m matrix of per-row base predictions from models that never saw
    that row, plus the audit map row_id -> fold used for its prediction."""
    n, m = train.n_rows, len(base_specs)
    meta = np.full((n, m), np.nan)
    position = {int(r): i for i, r in enumerate(train.row_ids)}
    for fold in range(plan.k):
        fold_train, fold_val = fold_split(train, plan, fold)
        val_pos = [position[int(r)] for r in fold_val.row_ids]
        for j, spec in enumerate(base_specs):
            model = fit(spec, fold_train)
            meta[val_pos, j] = predict_proba(model, fold_val.features)
    assert not np.isnan(meta).any()
    return meta


def fit_stacking(base_specs, meta_spec: LearnerSpec, train: Dataset, k: int,
                 seed: int, meta_link: str = "logistic",
                 allow_any_meta: bool = False) -> StackedEnsemble:
    """Stacked generalization: the meta-learner is trained only on
    predictions from base models that did not see the row, then every base
    spec is refit on the full training set for inference."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if meta_link not in ("logistic", "identity"):
        raise ValueError(f"unknown meta_link {meta_link!r}")
    if meta_link == "logistic" and meta_spec.algorithm != "logreg" \
            and not allow_any_meta:
        raise InvalidHyperparameter(
            "meta learner must be logreg (pass allow_any_meta to override)")
    plan = stratified_kfold(train, k, seed)
    meta_x = out_of_fold_features(base_specs, train, plan)
    if meta_link == "identity":
        design = np.hstack([meta_x, np.ones((meta_x.shape[0], 1))])
        coef, *_ = np.linalg.lstsq(design, train.labels.astype(np.float64),
                                   rcond=None)
        meta_model = {"weights": coef[:-1], "bias": float(coef[-1])}
    else:
        meta_names = tuple(f"base_{j}" for j in range(len(base_specs)))
        meta_ds = Dataset(meta_x, train.labels, meta_names,
                          np.arange(meta_x.shape[0]))
        meta_model = fit(meta_spec, meta_ds)
    base_models = tuple(fit(spec, train) for spec in base_specs)
    return StackedEnsemble(base_models, meta_model, meta_link, plan,
                           tuple(base_specs))


def base_probabilities(model: StackedEnsemble, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.column_stack([predict_proba(b, x) for b in model.base_models])


def predict_stacking(model: StackedEnsemble, x) -> np.ndarray:
    """Feed each base model's probability into the meta-learner."""
    meta_x = base_probabilities(model, x)
    if model.meta_link == "identity":
        return meta_x @ model.meta_model["weights"] + model.meta_model["bias"]
    return predict_proba(model.meta_model, meta_x)


def meta_weights(model: StackedEnsemble) -> np.ndarray:
    """Per-base-model weight inside the meta-learner."""
    if model.meta_link == "identity":
        return np.asarray(model.meta_model["weights"])
    return np.asarray(model.meta_model.state["weights"])


def vote(ensemble: VotingEnsemble, x, threshold: float = 0.5):
    """Hard: majority of thresholded member votes, ties broken by the mean
    probability and then by label 0. Soft: thresholded mean probability.

    Returns (labels, probabilities); hard mode returns None probabilities.
    """
    x = np.asarray(x, dtype=np.float64)
    probas = np.column_stack([predict_proba(m, x) for m in ensemble.models])
    mean_proba = probas.mean(axis=1)
    if ensemble.mode == "soft":
        return (mean_proba >= threshold).astype(np.int64), mean_proba
    votes = (probas >= threshold).sum(axis=1)
    n_models = probas.shape[1]
    labels = np.where(votes * 2 > n_models, 1,
                      np.where(votes * 2 < n_models, 0,
                               (mean_proba > threshold).astype(np.int64)))
    return labels.astype(np.int64), None
