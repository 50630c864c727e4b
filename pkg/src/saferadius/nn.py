"""Minimal deterministic inference engine for small classifiers.

Supports the six layer kinds needed by the portable model format: dense,
conv2d, relu, maxpool, flatten, softmax. All arithmetic runs in float64 and the
single-input path is routed through the batched one, so repeated evaluations
of the same input are bit-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError, NumericError
from .metrics import Metric, distance


@dataclass
class Dense:
    weights: np.ndarray  # (out, in), row-major
    bias: np.ndarray  # (out,)


@dataclass
class Conv2D:
    kernels: np.ndarray  # (kh, kw, in_ch, out_ch), row-major
    bias: np.ndarray  # (out_ch,)
    stride: int = 1
    padding: str = "valid"  # "valid" or "same"


@dataclass
class ReLU:
    pass


@dataclass
class MaxPool:
    window: tuple[int, int] = (2, 2)


@dataclass
class Flatten:
    pass


@dataclass
class Softmax:
    pass


Layer = Dense | Conv2D | ReLU | MaxPool | Flatten | Softmax


def _out_shape(layer: Layer, shape: tuple[int, ...]) -> tuple[int, ...]:
    if isinstance(layer, Dense):
        if len(shape) != 1:
            raise InputError(f"dense layer expects a flat input, got shape {shape}")
        out, inp = layer.weights.shape
        if shape[0] != inp:
            raise InputError(f"dense layer expects {inp} inputs, got {shape[0]}")
        return (out,)
    if isinstance(layer, Conv2D):
        if len(shape) != 3:
            raise InputError(f"conv2d expects an (h, w, c) input, got shape {shape}")
        h, w, c = shape
        kh, kw, cin, cout = layer.kernels.shape
        if c != cin:
            raise InputError(f"conv2d expects {cin} channels, got {c}")
        s = layer.stride
        if layer.padding == "valid":
            if h < kh or w < kw:
                raise InputError(f"conv2d kernel {kh}x{kw} larger than input {h}x{w}")
            return ((h - kh) // s + 1, (w - kw) // s + 1, cout)
        return (math.ceil(h / s), math.ceil(w / s), cout)
    if isinstance(layer, MaxPool):
        if len(shape) != 3:
            raise InputError(f"maxpool expects an (h, w, c) input, got shape {shape}")
        ph, pw = layer.window
        if shape[0] < ph or shape[1] < pw:
            raise InputError(f"maxpool window {ph}x{pw} larger than input {shape[:2]}")
        return (shape[0] // ph, shape[1] // pw, shape[2])
    if isinstance(layer, Flatten):
        return (int(np.prod(shape)),)
    return shape  # ReLU, Softmax


@dataclass
class Network:
    """An ordered layer list with a fixed input shape; pure after construction."""

    layers: list[Layer]
    input_shape: tuple[int, ...]
    num_classes: int

    def __post_init__(self):
        self.input_shape = tuple(int(s) for s in self.input_shape)
        if any(s < 1 for s in self.input_shape):
            raise InputError(f"bad input shape {self.input_shape}")
        if self.num_classes < 2:
            raise InputError("a classifier needs at least two classes")
        if not self.layers or not isinstance(self.layers[-1], Softmax):
            raise InputError("the final layer must be softmax")
        shape = self.input_shape
        for layer in self.layers:
            shape = _out_shape(layer, shape)
        if shape != (self.num_classes,):
            raise InputError(f"network output shape {shape} != ({self.num_classes},)")

    @property
    def n_dims(self) -> int:
        return int(np.prod(self.input_shape))


def _apply_batch(layer: Layer, x: np.ndarray) -> np.ndarray:
    if isinstance(layer, Dense):
        return x @ layer.weights.T + layer.bias
    if isinstance(layer, ReLU):
        return np.maximum(x, 0.0)
    if isinstance(layer, Flatten):
        return x.reshape(x.shape[0], -1)
    if isinstance(layer, Softmax):
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)
    if isinstance(layer, MaxPool):
        b, h, w, c = x.shape
        ph, pw = layer.window
        x = x[:, : (h // ph) * ph, : (w // pw) * pw, :]
        x = x.reshape(b, h // ph, ph, w // pw, pw, c)
        return x.max(axis=(2, 4))
    if isinstance(layer, Conv2D):
        kh, kw, cin, cout = layer.kernels.shape
        s = layer.stride
        if layer.padding == "same":
            h, w = x.shape[1], x.shape[2]
            out_h, out_w = math.ceil(h / s), math.ceil(w / s)
            pad_h = max((out_h - 1) * s + kh - h, 0)
            pad_w = max((out_w - 1) * s + kw - w, 0)
            x = np.pad(
                x,
                (
                    (0, 0),
                    (pad_h // 2, pad_h - pad_h // 2),
                    (pad_w // 2, pad_w - pad_w // 2),
                    (0, 0),
                ),
            )
        windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
        windows = windows[:, ::s, ::s, :, :, :]  # (b, oh, ow, c, kh, kw)
        out = np.einsum("bijckl,klcd->bijd", windows, layer.kernels)
        return out + layer.bias
    raise AssertionError(f"unknown layer {layer!r}")


def forward_batch(net: Network, xs: np.ndarray) -> np.ndarray:
    """Class confidences for a batch of inputs, shape (batch, num_classes)."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.shape[1:] != net.input_shape:
        if xs.ndim == 2 and xs.shape[1] == net.n_dims:
            xs = xs.reshape((xs.shape[0],) + net.input_shape)
        else:
            raise InputError(f"batch shape {xs.shape[1:]} incompatible with {net.input_shape}")
    if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
        raise InputError("input values must lie in [0, 1]")
    out = xs
    for layer in net.layers:
        out = _apply_batch(layer, out)
        if not np.isfinite(out).all():
            raise NumericError(f"non-finite activation after {type(layer).__name__}")
    return out


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Softmax confidences for a single input; deterministic across calls."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != net.input_shape:
        if x.size == net.n_dims:
            x = x.reshape(net.input_shape)
        else:
            raise InputError(f"input shape {x.shape} incompatible with {net.input_shape}")
    return forward_batch(net, x[np.newaxis])[0]


def classify(net: Network, x: np.ndarray) -> int:
    """Argmax class; ties break toward the lowest index."""
    return int(np.argmax(forward(net, x)))


def classify_batch(net: Network, xs: np.ndarray) -> np.ndarray:
    return np.argmax(forward_batch(net, xs), axis=1)


def confidence_margin(net: Network, x: np.ndarray, c: int) -> float:
    """Minimum gap between the confidence of class c and any other class."""
    probs = forward(net, x)
    return margin_from_probs(probs, c)


def margin_from_probs(probs: np.ndarray, c: int) -> float:
    if not 0 <= c < len(probs):
        raise InputError(f"class {c} out of range for {len(probs)} classes")
    others = np.delete(probs, c)
    return float(probs[c] - others.max())


@dataclass(frozen=True)
class LipschitzConstants:
    """User-supplied per-class rate-of-change bounds; never estimated here."""

    per_class: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {int(c): float(h) for c, h in self.per_class.items()}
        if any(h <= 0 for h in cleaned.values()):
            raise ConfigError("Lipschitz constants must be strictly positive")
        object.__setattr__(self, "per_class", cleaned)

    def require_classes(self, num_classes: int) -> None:
        missing = [c for c in range(num_classes) if c not in self.per_class]
        if missing:
            raise ConfigError(f"missing Lipschitz constants for classes {missing}")

    def max_pair_sum(self, c: int, num_classes: int) -> float:
        """max over c' != c of (h_c + h_c'), the denominator of the margin bound."""
        self.require_classes(num_classes)
        others = [self.per_class[j] for j in range(num_classes) if j != c]
        return self.per_class[c] + max(others)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "LipschitzConstants":
        with open(path) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise InputError("Lipschitz file must be a JSON object mapping class to constant")
        return cls({int(k): float(v) for k, v in raw.items()})


def lipschitz_violation(
    net: Network,
    metric: Metric,
    constants: LipschitzConstants,
    center: np.ndarray,
    radius: float,
    n_pairs: int,
    rng: np.random.Generator,
):
    """Sampling check of the rate-of-change bounds within the run's box.

    Returns None when every sampled pair satisfies every per-class bound, else
    a (x, x_prime, class, observed, allowed) tuple describing the violation.
    Used to reject run configurations whose constants are too small.
    """
    constants.require_classes(net.num_classes)
    center = np.asarray(center, dtype=np.float64).ravel()
    lo = np.clip(center - radius, 0.0, 1.0)
    hi = np.clip(center + radius, 0.0, 1.0)
    xs = rng.uniform(lo, hi, size=(2 * n_pairs, center.size))
    probs = forward_batch(net, xs)
    for i in range(n_pairs):
        a, b = xs[2 * i], xs[2 * i + 1]
        dist = distance(metric, a, b)
        for c in range(net.num_classes):
            observed = abs(float(probs[2 * i, c] - probs[2 * i + 1, c]))
            allowed = constants.per_class[c] * dist
            if observed > allowed + 1e-12:
                return a, b, c, observed, allowed
    return None


# ---------------------------------------------------------------------------
# Portable model file


MODEL_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["layers", "input_shape", "num_classes"],
    "additionalProperties": False,
    "properties": {
        "input_shape": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "integer", "minimum": 1},
        },
        "num_classes": {"type": "integer", "minimum": 2},
        "layers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["type"],
                "additionalProperties": False,
                "properties": {
                    "type": {
                        "enum": ["dense", "conv2d", "relu", "maxpool", "flatten", "softmax"]
                    },
                    "weights": {"type": "array", "items": {"type": "number"}},
                    "bias": {"type": "array", "items": {"type": "number"}},
                    "params": {"type": "object"},
                },
            },
        },
    },
}


def net_to_json(net: Network) -> dict:
    layers = []
    for layer in net.layers:
        if isinstance(layer, Dense):
            out, inp = layer.weights.shape
            layers.append(
                {
                    "type": "dense",
                    "weights": layer.weights.ravel().tolist(),
                    "bias": layer.bias.tolist(),
                    "params": {"in_features": int(inp), "out_features": int(out)},
                }
            )
        elif isinstance(layer, Conv2D):
            kh, kw, cin, cout = layer.kernels.shape
            layers.append(
                {
                    "type": "conv2d",
                    "weights": layer.kernels.ravel().tolist(),
                    "bias": layer.bias.tolist(),
                    "params": {
                        "kernel": [int(kh), int(kw)],
                        "in_channels": int(cin),
                        "out_channels": int(cout),
                        "stride": int(layer.stride),
                        "padding": layer.padding,
                    },
                }
            )
        elif isinstance(layer, ReLU):
            layers.append({"type": "relu"})
        elif isinstance(layer, MaxPool):
            layers.append({"type": "maxpool", "params": {"window": list(layer.window)}})
        elif isinstance(layer, Flatten):
            layers.append({"type": "flatten"})
        elif isinstance(layer, Softmax):
            layers.append({"type": "softmax"})
        else:
            raise AssertionError(layer)
    return {
        "input_shape": list(net.input_shape),
        "num_classes": net.num_classes,
        "layers": layers,
    }


def net_from_json(doc: dict) -> Network:
    try:
        import jsonschema

        jsonschema.validate(doc, MODEL_SCHEMA)
    except ImportError:  # pragma: no cover - jsonschema is a declared dependency
        pass
    except Exception as exc:
        raise InputError(f"model file does not match the schema: {exc}") from exc
    layers: list[Layer] = []
    for spec in doc["layers"]:
        kind = spec["type"]
        params = spec.get("params", {})
        if kind == "dense":
            out, inp = int(params["out_features"]), int(params["in_features"])
            w = np.asarray(spec["weights"], dtype=np.float64)
            if w.size != out * inp:
                raise InputError(f"dense weights: expected {out * inp} values, got {w.size}")
            layers.append(Dense(w.reshape(out, inp), np.asarray(spec["bias"], dtype=np.float64)))
        elif kind == "conv2d":
            kh, kw = (int(v) for v in params["kernel"])
            cin, cout = int(params["in_channels"]), int(params["out_channels"])
            w = np.asarray(spec["weights"], dtype=np.float64)
            if w.size != kh * kw * cin * cout:
                raise InputError("conv2d weights do not match the declared kernel dims")
            layers.append(
                Conv2D(
                    w.reshape(kh, kw, cin, cout),
                    np.asarray(spec["bias"], dtype=np.float64),
                    stride=int(params.get("stride", 1)),
                    padding=str(params.get("padding", "valid")),
                )
            )
        elif kind == "relu":
            layers.append(ReLU())
        elif kind == "maxpool":
            layers.append(MaxPool(tuple(int(v) for v in params["window"])))
        elif kind == "flatten":
            layers.append(Flatten())
        elif kind == "softmax":
            layers.append(Softmax())
        else:
            raise InputError(f"unknown layer type {kind!r}")
    return Network(layers, tuple(doc["input_shape"]), int(doc["num_classes"]))


def save_model(net: Network, path: str | Path) -> None:
    Path(path).write_text(json.dumps(net_to_json(net), indent=1, sort_keys=True) + "\n")


def load_model(path: str | Path) -> Network:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"model file is not valid JSON: {exc}") from exc
    return net_from_json(doc)
