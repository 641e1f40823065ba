"""Evaluation suite: confusion scores, ranking scores, agreement
coefficients, Brier calibration, and learning curves."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, fold_split, stratified_kfold
from .errors import (
    LengthMismatch,
    NoPositives,
    NonBinary,
    OutOfRange,
    SingleClass,
    SizeTooLarge,
)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    roc_auc: float
    pr_auc: float
    mcc: float
    kappa: float
    brier: float
    support: ConfusionMatrix
    n: int
    degenerate: tuple = ()          # names of zero-denominator metrics

    def as_record(self) -> dict:
        return {
            "precision": self.precision, "recall": self.recall,
            "f1": self.f1, "roc_auc": self.roc_auc, "pr_auc": self.pr_auc,
            "mcc": self.mcc, "kappa": self.kappa, "brier": self.brier,
        }


@dataclass(frozen=True)
class LearningCurve:
    rows: tuple                     # of (train_size, mean_train_acc, mean_test_acc)


def _check_labels(y):
    y = np.asarray(y)
    if not np.all(np.isin(y, (0, 1))):
        raise NonBinary("labels must be 0/1")
    return y.astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = _check_labels(y_true)
    y_pred = _check_labels(y_pred)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise LengthMismatch("label sequences must have equal nonzero length")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    return ConfusionMatrix(tp, fp, fn, tn)


def _safe_div(num, den, name, degenerate):
    if den == 0:
        degenerate.append(name)
        return 0.0
    return num / den


def classification_scores(cm: ConfusionMatrix, degenerate=None):
    """(precision, recall, f1, mcc, kappa); zero denominators yield 0 and
    append the metric name to the degenerate list when one is passed."""
    if degenerate is None:
        degenerate = []
    tp, fp, fn, tn = cm.tp, cm.fp, cm.fn, cm.tn
    n = cm.total
    precision = _safe_div(tp, tp + fp, "precision", degenerate)
    recall = _safe_div(tp, tp + fn, "recall", degenerate)
    f1 = _safe_div(2 * precision * recall, precision + recall, "f1", degenerate)
    mcc_den = np.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = _safe_div(tp * tn - fp * fn, mcc_den, "mcc", degenerate)
    p_o = (tp + tn) / n
    p_e = ((tp + fp) * (tp + fn) + (tn + fn) * (tn + fp)) / (n * n)
    kappa = _safe_div(p_o - p_e, 1.0 - p_e, "kappa", degenerate)
    return precision, recall, f1, float(mcc), kappa


def roc_auc(y_true, scores) -> float:
    """Mann-Whitney rank statistic: probability a random positive outranks
    a random negative, ties counting one half."""
    y = _check_labels(y_true)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("roc_auc needs both classes")
    order = np.argsort(s, kind="stable")
    ranks = np.empty(y.size)
    sorted_s = s[order]
    i = 0
    rank = np.arange(1, y.size + 1, dtype=np.float64)
    while i < y.size:                 # average ranks within tie groups
        j = i
        while j + 1 < y.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = rank[i:j + 1].mean()
        i = j + 1
    rank_sum = ranks[y == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def pr_auc(y_true, scores) -> float:
    """Average precision: sum of precision times recall increments over
    descending-score threshold steps, ties grouped, no interpolation."""
    y = _check_labels(y_true)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise NoPositives("pr_auc needs at least one positive")
    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    tp = 0
    seen = 0
    prev_recall = 0.0
    total = 0.0
    i = 0
    n = y.size
    while i < n:
        j = i
        while j + 1 < n and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        tp += int(y_sorted[i:j + 1].sum())
        seen += j + 1 - i
        recall = tp / n_pos
        precision = tp / seen
        total += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return float(total)


def brier(y_true, probabilities) -> float:
    y = _check_labels(y_true)
    p = np.asarray(probabilities, dtype=np.float64)
    if p.min() < 0.0 or p.max() > 1.0:
        raise OutOfRange("probabilities must lie in [0, 1]")
    if p.shape != y.shape:
        raise LengthMismatch("probabilities length != labels length")
    return float(np.mean((p - y) ** 2))


def evaluate(y_true, y_pred, probabilities) -> MetricsReport:
    """One full metrics row for a set of predictions."""
    degenerate = []
    cm = confusion(y_true, y_pred)
    precision, recall, f1, mcc, kappa = classification_scores(cm, degenerate)
    y = _check_labels(y_true)
    try:
        auc = roc_auc(y, probabilities)
    except SingleClass:
        degenerate.append("roc_auc")
        auc = 0.0
    try:
        ap = pr_auc(y, probabilities)
    except NoPositives:
        degenerate.append("pr_auc")
        ap = 0.0
    bs = brier(y, probabilities)
    return MetricsReport(precision, recall, f1, auc, ap, mcc, kappa, bs,
                         cm, cm.total, tuple(degenerate))


def _stratified_subsample(labels, size, rng):
    """Positional indices of a class-ratio-preserving subsample."""
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    n = labels.size
    n_pos = min(pos.size, max(1, int(round(size * pos.size / n))))
    n_neg = size - n_pos
    if n_neg > neg.size:
        n_neg = neg.size
        n_pos = size - n_neg
    take_pos = pos[rng.permutation(pos.size)[:n_pos]]
    take_neg = neg[rng.permutation(neg.size)[:n_neg]]
    return np.sort(np.concatenate([take_pos, take_neg]))


def learning_curve(spec, data: Dataset, train_sizes, k: int,
                   seed: int) -> LearningCurve:
    """Mean train/test accuracy over k stratified folds at each size,
    training on stratified subsamples of each fold's training side."""
    from .learners import fit, predict

    plan = stratified_kfold(data, k, seed)
    rows = []
    prev = 0
    for size in train_sizes:
        if size <= prev:
            raise ValueError("train_sizes must be strictly increasing")
        prev = size
        train_accs, test_accs = [], []
        for fold in range(plan.k):
            fold_train, fold_val = fold_split(data, plan, fold)
            if size > fold_train.n_rows:
                raise SizeTooLarge(
                    f"size {size} exceeds fold training rows {fold_train.n_rows}")
            rng = np.random.default_rng(seed + 1000 * fold + size)
            sub = fold_train.subset(
                _stratified_subsample(fold_train.labels, size, rng))
            model = fit(spec, sub)
            train_accs.append(
                float(np.mean(predict(model, sub.features) == sub.labels)))
            test_accs.append(
                float(np.mean(predict(model, fold_val.features) == fold_val.labels)))
        rows.append((size, float(np.mean(train_accs)), float(np.mean(test_accs))))
    return LearningCurve(tuple(rows))
