"""Config-driven experiment runner: sampler x representation x model grid
with deterministic seeding, leakage auditing, and report emission."""

from __future__ import annotations

import json
import os
import warnings
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import plots
from .config import ExperimentConfig, RunSpec
from .data import Dataset, apply_scaler, fit_scaler, load_csv, train_test_split
from .ensemble import (
    StackedEnsemble,
    VotingEnsemble,
    fit_stacking,
    meta_weights,
    predict_stacking,
    vote,
)
from .errors import ConfigError, IoError, SveadError
from .explain import (
    Background,
    ice_curves,
    permutation_importance,
    shapley_sampled,
    write_ice_csv,
    write_pip_csv,
    write_shap_csv,
)
from .learners import LearnerSpec, fit, predict_proba
from .metrics import MetricsReport, evaluate
from .resample import ResampleSpec, apply_resample
from .tsne import TsneConfig, fit_tsne
from .vae import TrainedVae, VaeArchitecture, latent_features, train_vae

ARTIFACT_VERSION = "0.1.0"

_DEFAULT_BASES = ({"algorithm": "logreg"}, {"algorithm": "knn"},
                  {"algorithm": "forest"}, {"algorithm": "svc"})


@dataclass
class ReportBundle:
    per_run: dict                   # name -> MetricsReport | {"error": str}
    environment: dict
    warnings: list


class LeakageGuard:
    """Records every row_id handed to a training-time stage and counts
    contacts with the held-out test rows."""

    def __init__(self, test_row_ids):
        self.test_ids = set(int(r) for r in test_row_ids)
        self.contacts = 0
        self.events = []

    def check(self, stage: str, row_ids):
        hit = self.test_ids.intersection(int(r) for r in row_ids)
        if hit:
            self.contacts += len(hit)
            self.events.append(f"{stage}: {len(hit)} test rows")

    def guarded_fit(self, spec, train):
        self.check(f"fit[{spec.algorithm}]", train.row_ids)
        return fit(spec, train)


def run_seed_for(master_seed: int, name: str) -> int:
    return (master_seed ^ zlib.crc32(name.encode("utf-8"))) & 0x7FFFFFFF


def _vae_from_config(run: RunSpec, train: Dataset, scaler_kind: str,
                     seed: int, guard: LeakageGuard) -> TrainedVae:
    cfg = dict(run.vae)
    likelihood = cfg.pop("decoder_likelihood",
                         "bernoulli" if scaler_kind == "minmax"
                         else "gaussian_unit_variance")
    arch = VaeArchitecture(
        input_dim=train.n_features,
        hidden_dims=tuple(cfg.pop("hidden_dims", ())),
        latent_dim=cfg.pop("latent_dim", 2),
        hidden_activation=cfg.pop("hidden_activation", "linear"),
        dropout_rate=cfg.pop("dropout_rate", 0.2),
        decoder_likelihood=likelihood,
    )
    epochs = cfg.pop("epochs", 30)
    batch_size = cfg.pop("batch_size", 64)
    learning_rate = cfg.pop("learning_rate", 1e-3)
    train_on = cfg.pop("train_on", "normal")
    if cfg:
        raise ConfigError(f"grid.{run.name}.vae",
                          f"unknown keys {sorted(cfg)}")
    guard.check("train_vae", train.row_ids)
    return train_vae(train, arch, epochs, batch_size, learning_rate,
                     seed, normal_only=(train_on == "normal"))


def _apply_representation(run: RunSpec, train: Dataset, test: Dataset,
                          scaler_kind: str, seed: int, guard: LeakageGuard):
    """Returns (train, test, predict-space transform, model artifact).

    The transform maps scaled original-feature matrices into the model's
    input space; it is None when no out-of-sample mapping exists (t-SNE).
    """
    if run.representation == "raw":
        return train, test, (lambda x: x), None
    if run.representation == "vae":
        model = _vae_from_config(run, train, scaler_kind, seed + 2, guard)
        names = tuple(f"z{i + 1}" for i in range(model.architecture.latent_dim))
        new_train = train.with_features(latent_features(model, train), names)
        new_test = test.with_features(latent_features(model, test), names)

        def transform(x, _model=model):
            from .vae import _encode_batch
            mu, _ = _encode_batch(_model.architecture, _model.params, x)
            return mu

        return new_train, new_test, transform, model
    # t-SNE has no out-of-sample extension: fit transductively on the
    # combined feature block, labels untouched (methodological caveat).
    cfg = dict(run.tsne)
    tsne_config = TsneConfig(
        perplexity=cfg.pop("perplexity", 30.0),
        max_iter=cfg.pop("max_iter", 500),
        learning_rate=cfg.pop("learning_rate", 200.0),
        n_components=cfg.pop("n_components", 2),
        max_points=cfg.pop("max_points", 5000),
        seed=seed + 3,
    )
    if cfg:
        raise ConfigError(f"grid.{run.name}.tsne", f"unknown keys {sorted(cfg)}")
    warnings.warn(
        f"run {run.name}: t-SNE features are fit transductively on "
        "train+test features; no out-of-sample extension exists")
    combined = np.vstack([train.features, test.features])
    embedding = fit_tsne(combined, tsne_config)
    names = tuple(f"t{i + 1}" for i in range(tsne_config.n_components))
    n_train = train.n_rows
    new_train = train.with_features(embedding.y[:n_train], names)
    new_test = test.with_features(embedding.y[n_train:], names)
    return new_train, new_test, None, embedding


def _base_specs(run: RunSpec, seed: int):
    bases = run.base_learners or _DEFAULT_BASES
    specs = []
    for i, entry in enumerate(bases):
        entry = dict(entry)
        algorithm = entry.pop("algorithm")
        hp = entry.pop("hyperparameters", entry)  # allow flat hyperparameters
        specs.append(LearnerSpec(algorithm, dict(hp), seed + 10 + i))
    return tuple(specs)


def _fit_model(run: RunSpec, train: Dataset, cv_k: int, seed: int,
               guard: LeakageGuard):
    """Returns (probability function over model-space features, weights for
    ensemble SHAP aggregation or None)."""
    if run.model in ("logreg", "knn", "svc", "forest"):
        spec = LearnerSpec(run.model, dict(run.learner), seed + 4)
        model = guard.guarded_fit(spec, train)
        return (lambda x: predict_proba(model, x)), None, model
    if run.model in ("voting_hard", "voting_soft"):
        specs = _base_specs(run, seed)
        models = tuple(guard.guarded_fit(s, train) for s in specs)
        mode = "hard" if run.model == "voting_hard" else "soft"
        ensemble = VotingEnsemble(models, mode)

        def proba(x, _e=ensemble):
            member = np.column_stack([predict_proba(m, x) for m in _e.models])
            return member.mean(axis=1)

        return proba, None, ensemble
    specs = _base_specs(run, seed)
    guard.check("fit_stacking", train.row_ids)
    meta_spec = LearnerSpec("logreg", {}, seed + 5)
    stacked = fit_stacking(specs, meta_spec, train, cv_k, seed + 6)
    return (lambda x: predict_stacking(stacked, x)), \
        np.abs(meta_weights(stacked)), stacked


def _emit_explanations(run: RunSpec, run_dir: str, pipeline_proba,
                       train: Dataset, test: Dataset, seed: int):
    """shap / pip / ice artifacts over original-feature space."""
    os.makedirs(run_dir, exist_ok=True)
    rng = np.random.default_rng(seed + 7)
    n_bg = min(100, train.n_rows)
    background = Background(
        train.features[rng.permutation(train.n_rows)[:n_bg]],
        "per_row_average")
    for flag in run.explain:
        if flag == "shap":
            pos = np.flatnonzero(test.labels == 1)[:3]
            neg = np.flatnonzero(test.labels == 0)[:2]
            rows = np.concatenate([pos, neg])
            attributions = [
                shapley_sampled(pipeline_proba, test.features[i], background,
                                n_permutations=200, seed=seed + 8,
                                row_id=int(test.row_ids[i]))
                for i in rows]
            write_shap_csv(attributions, test.feature_names,
                           os.path.join(run_dir, "shap.csv"))
            plots.save_shap_figure(attributions, test.feature_names,
                                   os.path.join(run_dir, "shap.png"))
        elif flag == "pip":
            ranking = permutation_importance(pipeline_proba, test,
                                             n_repeats=10, seed=seed + 9)
            write_pip_csv(ranking, os.path.join(run_dir, "pip.csv"))
            plots.save_pip_figure(ranking, os.path.join(run_dir, "pip.png"))
        elif flag.startswith("ice:"):
            feature = flag.split(":", 1)[1]
            subset = test.subset(np.arange(min(100, test.n_rows)))
            result = ice_curves(pipeline_proba, subset, feature)
            write_ice_csv(result, subset.row_ids,
                          os.path.join(run_dir, f"ice_{feature}.csv"))
            plots.save_ice_figure(
                result, os.path.join(run_dir, f"ice_{feature}.png"))


def execute_run(run: RunSpec, train_raw: Dataset, test_raw: Dataset,
                scaler_kind: str, cv_k: int, master_seed: int,
                guard: LeakageGuard, out_dir=None) -> MetricsReport:
    seed = run_seed_for(master_seed, run.name)
    guard.check("fit_scaler", train_raw.row_ids)
    scaler = fit_scaler(train_raw, scaler_kind)
    train = apply_scaler(scaler, train_raw)
    test = apply_scaler(scaler, test_raw)
    train, test, transform, _ = _apply_representation(
        run, train, test, scaler_kind, seed, guard)
    resample_spec = replace(run.resample, seed=run.resample.seed ^ (seed + 1))
    guard.check(f"resample[{resample_spec.method}]", train.row_ids)
    train = apply_resample(train, resample_spec)
    proba_fn, shap_weights, model = _fit_model(run, train, cv_k, seed, guard)
    probabilities = np.clip(proba_fn(test.features), 0.0, 1.0)
    y_pred = (probabilities >= 0.5).astype(np.int64)
    report = evaluate(test.labels, y_pred, probabilities)
    if run.explain and out_dir is not None:
        if transform is None:
            warnings.warn(
                f"run {run.name}: explanations skipped, the t-SNE "
                "representation has no out-of-sample prediction function")
        else:
            def pipeline_proba(x, _t=transform, _p=proba_fn):
                return _p(_t(np.asarray(x, dtype=np.float64)))

            # explanations live in original (scaled) feature space
            scaled_train = apply_scaler(scaler, train_raw)
            scaled_test = apply_scaler(scaler, test_raw)
            _emit_explanations(run, os.path.join(out_dir, run.name),
                               pipeline_proba, scaled_train, scaled_test,
                               seed)
    return report


def run_experiment(config: ExperimentConfig, master_seed: int = 0,
                   config_digest: str = "", out_dir=None) -> ReportBundle:
    """Load once, split once, execute every grid run in order.

    A failing run records an error entry without aborting its siblings.
    """
    data = load_csv(config.dataset_path, config.label_column)
    train_raw, test_raw = train_test_split(
        data, config.test_fraction, stratified=True, seed=config.split_seed)
    guard = LeakageGuard(test_raw.row_ids)
    per_run = {}
    collected = []
    for run in config.grid:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                per_run[run.name] = execute_run(
                    run, train_raw, test_raw, config.scaler_kind,
                    config.cv_k, master_seed, guard, out_dir)
            except SveadError as exc:
                per_run[run.name] = {"error": f"{type(exc).__name__}: {exc}"}
        collected.extend(f"{run.name}: {w.message}" for w in caught)
    if guard.contacts:
        collected.append(
            f"LEAKAGE: {guard.contacts} test-row contacts ({guard.events})")
    environment = {
        "master_seed": master_seed,
        "artifact_version": ARTIFACT_VERSION,
        "config_digest": config_digest,
        "leakage_test_row_contacts": guard.contacts,
    }
    return ReportBundle(per_run, environment, collected)


METRIC_COLUMNS = ("name", "precision", "recall", "f1", "roc_auc", "pr_auc",
                  "mcc", "kappa", "brier")


def bundle_payload(bundle: ReportBundle) -> dict:
    runs = {}
    for name, report in bundle.per_run.items():
        if isinstance(report, MetricsReport):
            record = report.as_record()
            record["degenerate"] = sorted(report.degenerate)
            record["n"] = report.n
            runs[name] = record
        else:
            runs[name] = report
    return {"runs": runs, "environment": bundle.environment,
            "warnings": list(bundle.warnings)}


def emit_report(bundle: ReportBundle, out_dir) -> list:
    """Write report.json, metrics.csv, and the summary figure; returns the
    written paths."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        payload = bundle_payload(bundle)
        report_path = os.path.join(out_dir, "report.json")
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2,
                      ensure_ascii=False)
            fh.write("\n")
        csv_path = os.path.join(out_dir, "metrics.csv")
        with open(csv_path, "w") as fh:
            fh.write(",".join(METRIC_COLUMNS) + "\n")
            for name, report in bundle.per_run.items():
                if not isinstance(report, MetricsReport):
                    continue
                record = report.as_record()
                fh.write(name + "," + ",".join(
                    repr(record[c]) for c in METRIC_COLUMNS[1:]) + "\n")
        figures_dir = os.path.join(out_dir, "figures")
        os.makedirs(figures_dir, exist_ok=True)
        figure_path = os.path.join(figures_dir, "metrics.png")
        plots.save_metrics_figure(
            {name: report.as_record()
             for name, report in bundle.per_run.items()
             if isinstance(report, MetricsReport)}, figure_path)
        return [report_path, csv_path, figure_path]
    except OSError as exc:
        raise IoError(str(exc)) from None
