"""Figure rendering for run reports.

Every plot is written next to the delimited output it visualizes; callers
pass explicit paths so the report layout stays in one place (the runner).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_METRIC_ORDER = ("precision", "recall", "f1", "roc_auc", "pr_auc",
                 "mcc", "kappa", "brier")


def save_metrics_figure(records: dict, path) -> None:
    """Grouped bar chart, one group per run, one bar per metric."""
    names = list(records)
    if not names:
        return
    n_runs = len(names)
    n_metrics = len(_METRIC_ORDER)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * n_runs), 4.5))
    x = np.arange(n_runs)
    width = 0.9 / n_metrics
    for i, metric in enumerate(_METRIC_ORDER):
        values = [records[name].get(metric, 0.0) for name in names]
        ax.bar(x + (i - n_metrics / 2) * width, values, width, label=metric)
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("score")
    ax.set_title("Per-run evaluation metrics")
    ax.legend(fontsize=7, ncol=4)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_pip_figure(ranking, path) -> None:
    names = [e[0] for e in ranking.entries]
    means = [e[1] for e in ranking.entries]
    sds = [e[2] for e in ranking.entries]
    fig, ax = plt.subplots(figsize=(6.0, max(3.0, 0.3 * len(names))))
    y = np.arange(len(names))
    ax.barh(y, means, xerr=sds, color="tab:blue")
    ax.set_yticks(y)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("metric drop after shuffle")
    ax.set_title("Permutation importance")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_shap_figure(attributions, feature_names, path) -> None:
    """Mean |phi| per feature across the attributed instances."""
    phis = np.stack([a.phi for a in attributions])
    mean_abs = np.abs(phis).mean(axis=0)
    order = np.argsort(-mean_abs)
    fig, ax = plt.subplots(figsize=(6.0, max(3.0, 0.3 * len(feature_names))))
    y = np.arange(len(feature_names))
    ax.barh(y, mean_abs[order], color="tab:red")
    ax.set_yticks(y)
    ax.set_yticklabels([feature_names[i] for i in order], fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("mean |phi|")
    ax.set_title("Shapley attribution magnitude")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ice_figure(result, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for curve in result.curves:
        ax.plot(result.grid, curve, color="gray", alpha=0.25, linewidth=0.7)
    ax.plot(result.grid, result.pdp, color="tab:orange", linewidth=2.0,
            label="partial dependence")
    ax.set_xlabel(result.feature_name)
    ax.set_ylabel("predicted positive probability")
    ax.set_title(f"ICE curves: {result.feature_name}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_embedding_figure(y, labels, path) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    labels = np.asarray(labels)
    for cls, color in ((0, "tab:blue"), (1, "tab:red")):
        pts = y[labels == cls]
        ax.scatter(pts[:, 0], pts[:, 1], s=8, color=color, alpha=0.6,
                   label=f"class {cls}")
    ax.set_title("2-D embedding")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
