"""Self-describing model container.

Layout: magic string ``SVEAD1`` (6 bytes), an 8-byte little-endian header
length, a UTF-8 JSON header, then the concatenated float64 array payload in
header order. The header carries ``kind``, model metadata, and an ``arrays``
list of (name, shape, dtype) descriptors.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .ensemble import StackedEnsemble
from .errors import IoError
from .data import FoldPlan
from .learners import Classifier, LearnerSpec
from .vae import TrainedVae, VaeArchitecture

MAGIC = b"SVEAD1"


def _pack(header: dict, arrays: list[tuple[str, np.ndarray]]) -> bytes:
    descriptors = []
    payload = bytearray()
    for name, arr in arrays:
        arr = np.ascontiguousarray(arr)
        descriptors.append({"name": name, "shape": list(arr.shape),
                            "dtype": str(arr.dtype)})
        payload.extend(arr.tobytes())
    header = dict(header, arrays=descriptors)
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(raw)) + raw + bytes(payload)


def _unpack(blob: bytes):
    if blob[:6] != MAGIC:
        raise IoError("not a SVEAD1 container")
    (hlen,) = struct.unpack("<Q", blob[6:14])
    header = json.loads(blob[14:14 + hlen].decode("utf-8"))
    offset = 14 + hlen
    arrays = {}
    for desc in header["arrays"]:
        dtype = np.dtype(desc["dtype"])
        count = int(np.prod(desc["shape"])) if desc["shape"] else 1
        nbytes = count * dtype.itemsize
        arr = np.frombuffer(blob[offset:offset + nbytes], dtype=dtype)
        arrays[desc["name"]] = arr.reshape(desc["shape"])
        offset += nbytes
    return header, arrays


def _classifier_entries(model: Classifier, prefix=""):
    algo = model.spec.algorithm
    meta = {"algorithm": algo, "hyperparameters": model.spec.hyperparameters,
            "seed": model.spec.seed, "n_features": model.n_features}
    arrays = []
    if algo in ("logreg", "svc"):
        arrays.append((prefix + "weights", model.state["weights"]))
        arrays.append((prefix + "bias", np.array([model.state["bias"]])))
    elif algo == "knn":
        for key in ("x", "y", "row_ids"):
            arrays.append((prefix + key, model.state[key]))
    else:
        meta["n_tree_nodes"] = [t["feature"].shape[0]
                                for t in model.state["trees"]]
        for i, tree in enumerate(model.state["trees"]):
            for key in ("feature", "threshold", "left", "right", "value"):
                arrays.append((f"{prefix}tree{i}_{key}", tree[key]))
    return meta, arrays


def _classifier_from(meta: dict, arrays: dict, prefix=""):
    spec = LearnerSpec(meta["algorithm"], dict(meta["hyperparameters"]),
                       meta["seed"])
    algo = meta["algorithm"]
    if algo in ("logreg", "svc"):
        state = {"weights": arrays[prefix + "weights"].copy(),
                 "bias": float(arrays[prefix + "bias"][0])}
    elif algo == "knn":
        state = {key: arrays[prefix + key].copy()
                 for key in ("x", "y", "row_ids")}
    else:
        trees = []
        for i in range(len(meta["n_tree_nodes"])):
            trees.append({key: arrays[f"{prefix}tree{i}_{key}"].copy()
                          for key in ("feature", "threshold", "left",
                                      "right", "value")})
        state = {"trees": trees}
    return Classifier(spec, state, meta["n_features"])


def save_classifier(model: Classifier, path) -> None:
    meta, arrays = _classifier_entries(model)
    with open(path, "wb") as fh:
        fh.write(_pack({"kind": "classifier", "model": meta}, arrays))


def save_vae(model: TrainedVae, path) -> None:
    arch = model.architecture
    header = {
        "kind": "vae",
        "architecture": {
            "input_dim": arch.input_dim,
            "hidden_dims": list(arch.hidden_dims),
            "latent_dim": arch.latent_dim,
            "hidden_activation": arch.hidden_activation,
            "dropout_rate": arch.dropout_rate,
            "decoder_likelihood": arch.decoder_likelihood,
        },
        "training_log": [[int(e), float(v)] for e, v in model.training_log],
        "seed": model.seed,
    }
    arrays = [(f"param_{i}", p) for i, p in enumerate(model.params)]
    with open(path, "wb") as fh:
        fh.write(_pack(header, arrays))


def save_stacking(model: StackedEnsemble, path) -> None:
    plan = model.fold_plan
    plan_digest = hashlib.sha256(json.dumps(
        sorted(plan.fold_assignment.items()), sort_keys=True
    ).encode()).hexdigest()
    bases = []
    arrays = []
    for i, base in enumerate(model.base_models):
        meta, entries = _classifier_entries(base, prefix=f"base{i}/")
        bases.append(meta)
        arrays.extend(entries)
    header = {"kind": "stacking", "bases": bases,
              "meta_link": model.meta_link,
              "fold_plan": {"k": plan.k, "seed": plan.seed,
                            "digest": plan_digest}}
    if model.meta_link == "identity":
        arrays.append(("meta/weights", model.meta_model["weights"]))
        arrays.append(("meta/bias", np.array([model.meta_model["bias"]])))
    else:
        meta_meta, entries = _classifier_entries(model.meta_model,
                                                 prefix="meta/")
        header["meta_model"] = meta_meta
        arrays.extend(entries)
    with open(path, "wb") as fh:
        fh.write(_pack(header, arrays))


def load(path):
    """Load any SVEAD1 container; returns a TrainedVae, Classifier, or
    StackedEnsemble according to its kind field."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(str(exc)) from None
    header, arrays = _unpack(blob)
    kind = header.get("kind")
    if kind == "classifier":
        return _classifier_from(header["model"], arrays)
    if kind == "vae":
        a = header["architecture"]
        arch = VaeArchitecture(a["input_dim"], tuple(a["hidden_dims"]),
                               a["latent_dim"], a["hidden_activation"],
                               a["dropout_rate"], a["decoder_likelihood"])
        params = tuple(arrays[f"param_{i}"].copy()
                       for i in range(len(header["arrays"])))
        log = tuple((int(e), float(v)) for e, v in header["training_log"])
        return TrainedVae(arch, params, log, header["seed"])
    if kind == "stacking":
        bases = tuple(_classifier_from(meta, arrays, prefix=f"base{i}/")
                      for i, meta in enumerate(header["bases"]))
        plan = FoldPlan(header["fold_plan"]["k"], {},
                        header["fold_plan"]["seed"])
        if header["meta_link"] == "identity":
            meta_model = {"weights": arrays["meta/weights"].copy(),
                          "bias": float(arrays["meta/bias"][0])}
        else:
            meta_model = _classifier_from(header["meta_model"], arrays,
                                          prefix="meta/")
        return StackedEnsemble(bases, meta_model, header["meta_link"], plan,
                               tuple(b.spec for b in bases))
    raise IoError(f"unknown container kind {kind!r}")
