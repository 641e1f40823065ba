"""Command-line entry points: run, explain, report."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import persist
from .config import load_config
from .data import load_csv
from .ensemble import StackedEnsemble, predict_stacking
from .errors import (
    ConfigError,
    EmptyDataset,
    IoError,
    MissingFile,
    MissingLabelColumn,
    NonBinaryLabel,
    NonNumericCell,
    SveadError,
)
from .explain import (
    Background,
    ice_curves,
    permutation_importance,
    shapley_sampled,
    write_ice_csv,
    write_pip_csv,
    write_shap_csv,
)
from .learners import Classifier, predict_proba
from .metrics import MetricsReport
from .runner import emit_report, run_experiment
from .vae import TrainedVae, reconstruction_probability

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNS_FAILED = 3

_DATA_ERRORS = (MissingFile, MissingLabelColumn, NonNumericCell,
                NonBinaryLabel, EmptyDataset)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="svead",
        description="Explainable anomaly-detection experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a config-defined grid")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--jobs", type=int, default=1,
                       help="accepted for interface stability; runs execute "
                            "sequentially in grid order")

    exp_p = sub.add_parser("explain", help="explain a saved model on a CSV")
    exp_p.add_argument("--model", required=True)
    exp_p.add_argument("--data", required=True)
    exp_p.add_argument("--out", required=True)
    exp_p.add_argument("--method", required=True,
                       choices=("shap", "pip", "ice"))
    exp_p.add_argument("--feature", default=None,
                       help="feature name (required for ice)")
    exp_p.add_argument("--label-column", default="Class")
    exp_p.add_argument("--seed", type=int, default=0)

    rep_p = sub.add_parser("report", help="print metrics.csv from a run dir")
    rep_p.add_argument("--in", dest="in_dir", required=True)
    return parser


def _model_predict_fn(model):
    if isinstance(model, StackedEnsemble):
        return lambda x: predict_stacking(model, x)
    if isinstance(model, Classifier):
        return lambda x: predict_proba(model, x)
    if isinstance(model, TrainedVae):
        return lambda x: np.array(
            [reconstruction_probability(model, row) for row in np.atleast_2d(x)])
    raise IoError(f"cannot build a prediction function for {type(model)!r}")


def _cmd_run(args) -> int:
    config, digest = load_config(args.config)
    bundle = run_experiment(config, master_seed=args.seed,
                            config_digest=digest, out_dir=args.out)
    emit_report(bundle, args.out)
    failed = [name for name, rep in bundle.per_run.items()
              if not isinstance(rep, MetricsReport)]
    if failed:
        print(f"{len(failed)} run(s) failed: {', '.join(failed)}",
              file=sys.stderr)
        return EXIT_RUNS_FAILED
    return EXIT_OK


def _cmd_explain(args) -> int:
    from . import plots

    model = persist.load(args.model)
    data = load_csv(args.data, args.label_column)
    predict_fn = _model_predict_fn(model)
    os.makedirs(args.out, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    if args.method == "shap":
        n_bg = min(100, data.n_rows)
        background = Background(
            data.features[rng.permutation(data.n_rows)[:n_bg]],
            "per_row_average")
        rows = range(min(5, data.n_rows))
        attributions = [
            shapley_sampled(predict_fn, data.features[i], background,
                            n_permutations=200, seed=args.seed + i,
                            row_id=int(data.row_ids[i]))
            for i in rows]
        write_shap_csv(attributions, data.feature_names,
                       os.path.join(args.out, "shap.csv"))
        plots.save_shap_figure(attributions, data.feature_names,
                               os.path.join(args.out, "shap.png"))
    elif args.method == "pip":
        ranking = permutation_importance(predict_fn, data, seed=args.seed)
        write_pip_csv(ranking, os.path.join(args.out, "pip.csv"))
        plots.save_pip_figure(ranking, os.path.join(args.out, "pip.png"))
    else:
        if not args.feature:
            raise ConfigError("--feature", "required for the ice method")
        result = ice_curves(predict_fn, data, args.feature)
        write_ice_csv(result, data.row_ids,
                      os.path.join(args.out, f"ice_{args.feature}.csv"))
        plots.save_ice_figure(
            result, os.path.join(args.out, f"ice_{args.feature}.png"))
    return EXIT_OK


def _cmd_report(args) -> int:
    path = os.path.join(args.in_dir, "metrics.csv")
    if not os.path.isfile(path):
        raise IoError(f"no metrics.csv in {args.in_dir}")
    with open(path) as fh:
        sys.stdout.write(fh.read())
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "explain":
            return _cmd_explain(args)
        return _cmd_report(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SveadError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
