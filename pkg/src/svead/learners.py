"""Base classifiers: logistic regression, KNN, random forest, linear SVC.

All four train deterministically from (spec, seed, data) and expose
positive-class probabilities through predict_proba.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import DimensionMismatch, InvalidHyperparameter, SingleClass

_DEFAULTS = {
    "logreg": {"l2_lambda": 1e-3, "learning_rate": 0.1, "epochs": 500},
    "knn": {"k": 5},
    "forest": {"n_trees": 100, "max_depth": 10, "min_leaf": 2,
               "feature_subsample": "sqrt", "bootstrap": True},
    "svc": {"c": 1.0, "epochs": 200},
}


@dataclass(frozen=True)
class LearnerSpec:
    algorithm: str                       # logreg | knn | forest | svc
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in _DEFAULTS:
            raise InvalidHyperparameter(f"unknown algorithm {self.algorithm!r}")
        known = _DEFAULTS[self.algorithm]
        for name in self.hyperparameters:
            if name not in known:
                raise InvalidHyperparameter(
                    f"{self.algorithm} does not take {name!r}")
        merged = dict(known)
        merged.update(self.hyperparameters)
        if self.algorithm == "knn" and merged["k"] < 1:
            raise InvalidHyperparameter("k must be >= 1")
        if self.algorithm == "forest" and merged["n_trees"] < 1:
            raise InvalidHyperparameter("n_trees must be >= 1")
        object.__setattr__(self, "hyperparameters", merged)

    def hp(self, name):
        return self.hyperparameters[name]


@dataclass(frozen=True)
class Classifier:
    spec: LearnerSpec
    state: dict
    n_features: int


def _check_x(model: Classifier, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} features, got {x.shape[1]}")
    return x


def _sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)),
                    np.exp(np.minimum(x, 0)) / (1.0 + np.exp(np.minimum(x, 0))))


# --- logistic regression ------------------------------------------------

def _fit_logreg(spec: LearnerSpec, train: Dataset) -> dict:
    x, y = train.features, train.labels.astype(np.float64)
    n, d = x.shape
    lam = spec.hp("l2_lambda")
    lr = spec.hp("learning_rate")
    w = np.zeros(d)
    b = 0.0
    for _ in range(spec.hp("epochs")):
        p = _sigmoid(x @ w + b)
        err = p - y
        grad_w = x.T @ err / n + lam * w
        grad_b = err.mean()
        w -= lr * grad_w
        b -= lr * grad_b
    return {"weights": w, "bias": b}


def logreg_loss_and_grad(w, b, x, y, lam):
    """Regularized mean logistic loss and its gradient (for gradient checks)."""
    n = x.shape[0]
    margin = x @ w + b
    loss = float(np.mean(np.logaddexp(0.0, margin) - y * margin)
                 + 0.5 * lam * np.dot(w, w))
    p = _sigmoid(margin)
    return loss, x.T @ (p - y) / n + lam * w, float(np.mean(p - y))


# --- linear SVC (Pegasos) -----------------------------------------------

def _fit_svc(spec: LearnerSpec, train: Dataset) -> dict:
    x = train.features
    y = np.where(train.labels == 1, 1.0, -1.0)
    n, d = x.shape
    lam = 1.0 / (spec.hp("c") * n)
    rng = np.random.default_rng(spec.seed)
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(spec.hp("epochs")):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (x[i] @ w + b)
            w *= (1.0 - eta * lam)
            if margin < 1.0:
                w += eta * y[i] * x[i]
                b += eta * y[i] * 0.01    # small unregularized bias step
    return {"weights": w, "bias": b}


# --- KNN ----------------------------------------------------------------

def _fit_knn(spec: LearnerSpec, train: Dataset) -> dict:
    # rows stored in ascending row_id order so stable distance sorts break
    # ties toward the lower row_id
    order = np.argsort(train.row_ids, kind="stable")
    return {"x": train.features[order], "y": train.labels[order],
            "row_ids": train.row_ids[order]}


def _knn_proba(model: Classifier, x: np.ndarray) -> np.ndarray:
    tx, ty = model.state["x"], model.state["y"]
    k = min(model.spec.hp("k"), tx.shape[0])
    out = np.empty(x.shape[0])
    chunk = 256
    for start in range(0, x.shape[0], chunk):
        block = x[start:start + chunk]
        d2 = ((block[:, None, :] - tx[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[start:start + chunk] = ty[nearest].mean(axis=1)
    return out


# --- random forest ------------------------------------------------------

def _best_split(x, y, feature_indices, min_leaf):
    """Exhaustive Gini search over midpoints of consecutive sorted unique
    values; features scanned in the given order, strict improvement wins."""
    n = y.shape[0]
    parent_pos = y.sum()
    best = (np.inf, None, None)      # (weighted impurity, feature, threshold)
    for f in feature_indices:
        order = np.argsort(x[:, f], kind="stable")
        xv = x[order, f]
        yv = y[order]
        cum_pos = np.cumsum(yv)
        boundary = np.flatnonzero(xv[1:] > xv[:-1]) + 1   # left-side sizes
        if boundary.size == 0:
            continue
        left_n = boundary.astype(np.float64)
        right_n = n - left_n
        valid = (left_n >= min_leaf) & (right_n >= min_leaf)
        if not valid.any():
            continue
        left_pos = cum_pos[boundary - 1].astype(np.float64)
        right_pos = parent_pos - left_pos
        pl = left_pos / left_n
        pr = right_pos / right_n
        gini = (left_n * 2 * pl * (1 - pl) + right_n * 2 * pr * (1 - pr)) / n
        gini = np.where(valid, gini, np.inf)
        j = int(np.argmin(gini))
        if gini[j] < best[0] - 1e-15:
            threshold = 0.5 * (xv[boundary[j] - 1] + xv[boundary[j]])
            best = (float(gini[j]), int(f), float(threshold))
    return best


def _grow_tree(x, y, spec, rng):
    """Iterative CART growth; returns parallel node arrays."""
    max_depth = spec.hp("max_depth")
    min_leaf = spec.hp("min_leaf")
    sub = spec.hp("feature_subsample")
    d = x.shape[1]
    if sub == "sqrt":
        n_sub = max(1, int(np.sqrt(d)))
    elif sub in ("all", None):
        n_sub = d
    else:
        n_sub = max(1, min(int(sub), d))
    feature = []
    threshold = []
    left = []
    right = []
    value = []
    stack = [(np.arange(x.shape[0]), 0, -1, False)]
    while stack:
        idx, depth, parent, is_right = stack.pop()
        node = len(feature)
        if parent >= 0:
            if is_right:
                right[parent] = node
            else:
                left[parent] = node
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        yv = y[idx]
        value.append(float(yv.mean()))
        if depth >= max_depth or idx.size < 2 * min_leaf or \
                yv.min() == yv.max():
            continue
        chosen = np.sort(rng.choice(d, size=n_sub, replace=False))
        _, f, thr = _best_split(x[idx], yv, chosen, min_leaf)
        if f is None:
            continue
        feature[node] = f
        threshold[node] = thr
        go_left = x[idx, f] <= thr
        # push right first so the left child is grown (and numbered) first
        stack.append((idx[~go_left], depth + 1, node, True))
        stack.append((idx[go_left], depth + 1, node, False))
    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value),
    }


def _tree_predict(tree, x):
    nodes = np.zeros(x.shape[0], dtype=np.int64)
    rows = np.arange(x.shape[0])
    active = tree["feature"][nodes] >= 0
    while active.any():
        idx = rows[active]
        cur = nodes[idx]
        go_left = x[idx, tree["feature"][cur]] <= tree["threshold"][cur]
        nodes[idx] = np.where(go_left, tree["left"][cur], tree["right"][cur])
        active = tree["feature"][nodes] >= 0
    return tree["value"][nodes]


def _fit_forest(spec: LearnerSpec, train: Dataset) -> dict:
    x, y = train.features, train.labels
    trees = []
    for t in range(spec.hp("n_trees")):
        rng = np.random.default_rng(spec.seed + t)
        if spec.hp("bootstrap"):
            idx = rng.integers(0, x.shape[0], size=x.shape[0])
        else:
            idx = np.arange(x.shape[0])
        trees.append(_grow_tree(x[idx], y[idx], spec, rng))
    return {"trees": trees}


# --- uniform contract ---------------------------------------------------

def fit(spec: LearnerSpec, train: Dataset) -> Classifier:
    """Train one base classifier; deterministic for fixed (spec, data)."""
    classes = np.unique(train.labels)
    if classes.size < 2:
        if spec.algorithm == "knn":
            warnings.warn("knn fitted on a single-class training set")
        else:
            raise SingleClass(
                f"{spec.algorithm} requires both classes in training data")
    fitter = {"logreg": _fit_logreg, "knn": _fit_knn,
              "forest": _fit_forest, "svc": _fit_svc}[spec.algorithm]
    return Classifier(spec, fitter(spec, train), train.n_features)


def predict_proba(model: Classifier, x) -> np.ndarray:
    """Positive-class probability per row.

    Margin-based models use a logistic link; the SVC output is therefore a
    monotone mapping of the margin, not a calibrated probability.
    """
    x = _check_x(model, x)
    algo = model.spec.algorithm
    if algo in ("logreg", "svc"):
        return _sigmoid(x @ model.state["weights"] + model.state["bias"])
    if algo == "knn":
        return _knn_proba(model, x)
    preds = np.stack([_tree_predict(t, x) for t in model.state["trees"]])
    return preds.mean(axis=0)


def predict(model: Classifier, x, threshold: float = 0.5) -> np.ndarray:
    """Hard labels: 1 iff probability >= threshold."""
    return (predict_proba(model, x) >= threshold).astype(np.int64)
