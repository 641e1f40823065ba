"""Exact t-SNE: perplexity-calibrated affinities, Student-t similarities,
and KL gradient descent with momentum and early exaggeration."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    NonFiniteGradient,
    PerplexityInfeasible,
    ShapeMismatch,
    TooManyPoints,
)

_EPS = 1e-12


@dataclass(frozen=True)
class AffinityMatrix:
    p: np.ndarray
    kind: str                      # "conditional" | "joint"


@dataclass(frozen=True)
class Embedding:
    y: np.ndarray                  # (n, d)
    final_kl: float
    iterations_run: int
    seed: int


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    max_iter: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch_iter: int = 250
    n_components: int = 2
    max_points: int = 5000
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.early_exaggeration <= 0:
            raise ValueError("rates must be positive")
        if self.perplexity <= 1:
            raise ValueError("perplexity must exceed 1")


def _squared_distances(x: np.ndarray) -> np.ndarray:
    sq = (x ** 2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _row_affinity(d2_row: np.ndarray, beta: float) -> np.ndarray:
    p = np.exp(-d2_row * beta)
    total = p.sum()
    if total <= 0:
        return p
    return p / total


def _row_entropy(p: np.ndarray) -> float:
    nz = p[p > _EPS]
    return float(-(nz * np.log2(nz)).sum())


def conditional_affinities(x: np.ndarray, perplexity: float,
                           max_search: int = 200) -> AffinityMatrix:
    """Per-row Gaussian affinities with the bandwidth calibrated by binary
    search so each row's 2^entropy matches the target perplexity."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points")
    if perplexity >= n:
        raise ValueError("perplexity must be below the point count")
    d2 = _squared_distances(x)
    if np.any((d2 + np.eye(n)) == 0.0):
        warnings.warn("duplicate points jittered before affinity search")
        rng = np.random.default_rng(0)
        x = x + rng.normal(0.0, 1e-12, size=x.shape)
        d2 = _squared_distances(x)
    target = np.log2(perplexity)
    p = np.zeros((n, n))
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        row_d2 = d2[i][mask[i]]
        beta, lo, hi = 1.0, 0.0, np.inf
        row_p = _row_affinity(row_d2, beta)
        for _ in range(max_search):
            h = _row_entropy(row_p)
            # search well past the 1e-3 contract so oracle comparisons hold
            if abs(2.0 ** h - perplexity) <= 1e-9 * perplexity:
                break
            if h > target:          # too spread: raise beta
                lo = beta
                beta = beta * 2.0 if np.isinf(hi) else (lo + hi) / 2.0
            else:
                hi = beta
                beta = (lo + hi) / 2.0
            row_p = _row_affinity(row_d2, beta)
        if abs(2.0 ** _row_entropy(row_p) - perplexity) > 1e-3 * perplexity:
            raise PerplexityInfeasible(
                f"row {i}: bandwidth search failed after {max_search} steps")
        p[i][mask[i]] = row_p
    return AffinityMatrix(p, "conditional")


def symmetrize(cond: AffinityMatrix) -> AffinityMatrix:
    """Joint affinities p(i,j) = (p(i|j) + p(j|i)) / 2N."""
    if cond.kind != "conditional":
        raise ValueError("input must be a conditional matrix")
    n = cond.p.shape[0]
    joint = (cond.p + cond.p.T) / (2.0 * n)
    return AffinityMatrix(joint, "joint")


def low_dim_affinities(y: np.ndarray) -> AffinityMatrix:
    """Student-t (df=1) similarities normalized over all ordered pairs."""
    y = np.asarray(y, dtype=np.float64)
    kernel = 1.0 / (1.0 + _squared_distances(y))
    np.fill_diagonal(kernel, 0.0)
    return AffinityMatrix(kernel / kernel.sum(), "joint")


def kl_divergence(p: AffinityMatrix, q: AffinityMatrix) -> float:
    """Sum over i != j of p log(p/q), with 0 log(0/q) = 0."""
    if p.p.shape != q.p.shape:
        raise ShapeMismatch("affinity matrices differ in shape")
    pm, qm = p.p, q.p
    nz = pm > 0
    return float((pm[nz] * np.log(pm[nz] / np.maximum(qm[nz], _EPS))).sum())


def _gradient(p: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Analytic KL gradient wrt y; returns (gradient, current KL)."""
    kernel = 1.0 / (1.0 + _squared_distances(y))
    np.fill_diagonal(kernel, 0.0)
    q = kernel / kernel.sum()
    pq = (p - q) * kernel
    grad = 4.0 * ((np.diag(pq.sum(axis=1)) - pq) @ y)
    nz = p > 0
    kl = float((p[nz] * np.log(p[nz] / np.maximum(q[nz], _EPS))).sum())
    return grad, kl


def fit_tsne(x: np.ndarray, config: TsneConfig) -> Embedding:
    """Gradient descent on the exact KL objective.

    Early exaggeration multiplies P for the first exaggeration_iters steps;
    momentum switches from the early to the late value at
    momentum_switch_iter.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 5:
        raise ValueError("need at least 5 points")
    if n > config.max_points:
        raise TooManyPoints(f"{n} points exceeds cap {config.max_points}")
    p = symmetrize(conditional_affinities(x, config.perplexity)).p
    rng = np.random.default_rng(config.seed)
    y = rng.normal(0.0, 1e-4, size=(n, config.n_components))
    velocity = np.zeros_like(y)
    gains = np.ones_like(y)
    for it in range(config.max_iter):
        exaggerate = it < config.exaggeration_iters
        p_eff = p * config.early_exaggeration if exaggerate else p
        grad, _ = _gradient(p_eff, y)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradient(f"non-finite gradient at iteration {it}")
        momentum = (config.momentum_early if it < config.momentum_switch_iter
                    else config.momentum_late)
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        velocity = momentum * velocity - config.learning_rate * gains * grad
        y = y + velocity
        y = y - y.mean(axis=0)
    _, final_kl = _gradient(p, y)
    return Embedding(y, final_kl, config.max_iter, config.seed)


def export_embedding_csv(embedding: Embedding, row_ids, path) -> None:
    """Write (row_id, y1, y2[, y3]) rows for plotting."""
    d = embedding.y.shape[1]
    header = "row_id," + ",".join(f"y{i + 1}" for i in range(d))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for rid, row in zip(row_ids, embedding.y):
            fh.write(str(int(rid)) + "," +
                     ",".join(repr(float(v)) for v in row) + "\n")
