"""Experiment configuration: JSON schema, strict validation, digesting.

The file is plain JSON (see README for the full schema). Unknown keys are
rejected with the offending field path so grid typos fail fast.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .resample import ResampleSpec

_MODELS = ("logreg", "knn", "svc", "forest",
           "voting_hard", "voting_soft", "stacking")
_REPRESENTATIONS = ("raw", "tsne", "vae")


@dataclass(frozen=True)
class RunSpec:
    name: str
    resample: ResampleSpec
    representation: str = "raw"
    tsne: dict = field(default_factory=dict)
    vae: dict = field(default_factory=dict)
    model: str = "logreg"
    learner: dict = field(default_factory=dict)       # single-model hyperparameters
    base_learners: tuple = ()                         # for voting / stacking
    explain: tuple = ()                               # "shap" | "pip" | "ice:<feature>"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str
    label_column: str
    scaler_kind: str = "zscore"
    test_fraction: float = 0.3
    split_seed: int = 0
    cv_k: int = 5
    grid: tuple = ()
    output_dir: str = "svead-out"


def _require_keys(obj: dict, path: str, allowed: set, required: set = frozenset()):
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}.{key}", "missing required key")


def _parse_resample(obj, path) -> ResampleSpec:
    _require_keys(obj, path, {"method", "smote_k", "target_ratio", "seed"})
    try:
        return ResampleSpec(obj.get("method", "none"),
                            obj.get("smote_k", 5),
                            obj.get("target_ratio", 1.0),
                            obj.get("seed", 0))
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_run(obj, index) -> RunSpec:
    path = f"grid[{index}]"
    _require_keys(obj, path,
                  {"name", "resample", "representation", "tsne", "vae",
                   "model", "learner", "base_learners", "explain"},
                  {"name", "model"})
    name = obj["name"]
    if not isinstance(name, str) or not name:
        raise ConfigError(f"{path}.name", "must be a non-empty string")
    model = obj["model"]
    if model not in _MODELS:
        raise ConfigError(f"{path}.model", f"must be one of {_MODELS}")
    representation = obj.get("representation", "raw")
    if representation not in _REPRESENTATIONS:
        raise ConfigError(f"{path}.representation",
                          f"must be one of {_REPRESENTATIONS}")
    resample = _parse_resample(obj.get("resample", {}), f"{path}.resample")
    explain = obj.get("explain", [])
    for flag in explain:
        if flag not in ("shap", "pip") and not flag.startswith("ice:"):
            raise ConfigError(f"{path}.explain",
                              f"unknown explain flag {flag!r}")
    base = obj.get("base_learners", [])
    for i, spec in enumerate(base):
        if not isinstance(spec, dict) or "algorithm" not in spec:
            raise ConfigError(f"{path}.base_learners[{i}]",
                              "must be an object with an algorithm key")
    return RunSpec(name, resample, representation,
                   dict(obj.get("tsne", {})), dict(obj.get("vae", {})),
                   model, dict(obj.get("learner", {})),
                   tuple(dict(s) for s in base), tuple(explain))


def parse_config(obj: dict) -> ExperimentConfig:
    _require_keys(obj, "config",
                  {"dataset", "split", "cv", "grid", "output_dir"},
                  {"dataset", "grid"})
    dataset = obj["dataset"]
    _require_keys(dataset, "dataset", {"path", "label_column", "scaler"},
                  {"path", "label_column"})
    scaler = dataset.get("scaler", "zscore")
    if scaler not in ("zscore", "minmax"):
        raise ConfigError("dataset.scaler", "must be zscore or minmax")
    split = obj.get("split", {})
    _require_keys(split, "split", {"test_fraction", "seed"})
    test_fraction = split.get("test_fraction", 0.3)
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("split.test_fraction", "must be in (0, 1)")
    cv = obj.get("cv", {})
    _require_keys(cv, "cv", {"k"})
    k = cv.get("k", 5)
    if not isinstance(k, int) or k < 2:
        raise ConfigError("cv.k", "must be an integer >= 2")
    grid_raw = obj["grid"]
    if not isinstance(grid_raw, list) or not grid_raw:
        raise ConfigError("grid", "must be a non-empty list")
    grid = tuple(_parse_run(run, i) for i, run in enumerate(grid_raw))
    names = [run.name for run in grid]
    if len(set(names)) != len(names):
        raise ConfigError("grid", "run names must be unique")
    return ExperimentConfig(dataset["path"], dataset["label_column"], scaler,
                            test_fraction, split.get("seed", 0), k, grid,
                            obj.get("output_dir", "svead-out"))


def load_config(path) -> tuple[ExperimentConfig, str]:
    """Parse a config file; returns (config, sha256 digest of its canonical
    JSON form)."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config", "top level must be an object")
    digest = hashlib.sha256(
        json.dumps(obj, sort_keys=True).encode("utf-8")).hexdigest()
    return parse_config(obj), digest
