"""Convert trained classifiers into the verifier's portable model format.

The document is built here, layer by layer, with weights flattened row-major,
then validated against the verifier's published schema before it is written.
Serialization is canonical (sorted keys, fixed indent), so re-exporting the
same model reproduces the file byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
from saferadius.nn import MODEL_SCHEMA

from .errors import UnsupportedLayerError


def dense_doc(weights: np.ndarray, bias: np.ndarray) -> dict:
    weights = np.asarray(weights, dtype=np.float64)
    out, inp = weights.shape
    return {
        "type": "dense",
        "weights": weights.ravel().tolist(),
        "bias": np.asarray(bias, dtype=np.float64).tolist(),
        "params": {"in_features": int(inp), "out_features": int(out)},
    }


def conv2d_doc(kernels: np.ndarray, bias: np.ndarray, stride: int = 1, padding: str = "valid") -> dict:
    kernels = np.asarray(kernels, dtype=np.float64)
    kh, kw, cin, cout = kernels.shape
    return {
        "type": "conv2d",
        "weights": kernels.ravel().tolist(),
        "bias": np.asarray(bias, dtype=np.float64).tolist(),
        "params": {
            "kernel": [int(kh), int(kw)],
            "in_channels": int(cin),
            "out_channels": int(cout),
            "stride": int(stride),
            "padding": padding,
        },
    }


def plain_doc(kind: str) -> dict:
    return {"type": kind}


@dataclass
class ExportManifest:
    """What was exported, where, and the checksum of the emitted file."""

    source: str
    path: str
    layer_map: list[dict] = field(default_factory=list)
    parameter_count: int = 0
    sha256: str = ""

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "path": self.path,
            "layer_map": self.layer_map,
            "parameter_count": self.parameter_count,
            "sha256": self.sha256,
        }


def _layer_parameters(layer: dict) -> int:
    return len(layer.get("weights", ())) + len(layer.get("bias", ()))


def write_portable(doc: dict, out_path: str | Path, source: str) -> ExportManifest:
    """Validate the document against the verifier schema, write it, checksum it."""
    jsonschema.validate(doc, MODEL_SCHEMA)
    payload = (json.dumps(doc, indent=1, sort_keys=True) + "\n").encode("ascii")
    out_path = Path(out_path)
    out_path.write_bytes(payload)
    return ExportManifest(
        source=source,
        path=str(out_path),
        layer_map=[
            {"type": layer["type"], "parameters": _layer_parameters(layer)}
            for layer in doc["layers"]
        ],
        parameter_count=sum(_layer_parameters(layer) for layer in doc["layers"]),
        sha256=hashlib.sha256(payload).hexdigest(),
    )


def _is_sklearn_mlp(model) -> bool:
    return hasattr(model, "coefs_") and hasattr(model, "intercepts_")


def _from_sklearn_mlp(model) -> dict:
    activation = getattr(model, "activation", "relu")
    if activation != "relu":
        raise UnsupportedLayerError(f"unsupported hidden activation {activation!r}")
    out_activation = getattr(model, "out_activation_", "softmax")
    coefs = [np.asarray(c, dtype=np.float64) for c in model.coefs_]
    intercepts = [np.asarray(b, dtype=np.float64) for b in model.intercepts_]
    layers: list[dict] = []
    for i, (w, b) in enumerate(zip(coefs, intercepts)):
        last = i == len(coefs) - 1
        if last and out_activation == "logistic":
            # One logistic unit z is exactly softmax over the logits (0, z).
            if w.shape[1] != 1:
                raise UnsupportedLayerError("logistic output with several units")
            stacked_w = np.vstack([np.zeros((1, w.shape[0])), w.T])
            stacked_b = np.array([0.0, float(b[0])])
            layers.append(dense_doc(stacked_w, stacked_b))
        else:
            layers.append(dense_doc(w.T, b))
        if not last:
            layers.append(plain_doc("relu"))
    if out_activation not in ("softmax", "logistic"):
        raise UnsupportedLayerError(f"unsupported output activation {out_activation!r}")
    layers.append(plain_doc("softmax"))
    n_in = coefs[0].shape[0]
    n_classes = len(getattr(model, "classes_", [])) or layers[-2]["params"]["out_features"]
    return {"input_shape": [int(n_in)], "num_classes": int(n_classes), "layers": layers}


def export(source_model, out_path: str | Path) -> ExportManifest:
    """Write a portable model file for a supported source model.

    Supported sources: scikit-learn MLPClassifier (relu hidden layers,
    softmax or binary logistic output) and already-built layer documents
    (dicts following the portable structure).
    """
    if isinstance(source_model, dict):
        doc = source_model
        label = "document"
    elif _is_sklearn_mlp(source_model):
        doc = _from_sklearn_mlp(source_model)
        label = f"sklearn.{type(source_model).__name__}"
    else:
        raise UnsupportedLayerError(
            f"cannot export {type(source_model).__name__}: not a supported classifier"
        )
    return write_portable(doc, out_path, label)
