"""Catalogued deterministic oracle networks used by the verifier's tests.

Each entry carries fixed published weights and its own reference forward pass,
written with plain loops so agreement with the verifier's inference engine is
a genuine cross-implementation check.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .convert import ExportManifest, conv2d_doc, dense_doc, plain_doc, write_portable
from .errors import UnknownOracleError

DENSE_4_2_W = np.array(
    [
        [0.8, -0.4, 0.3, -0.2],
        [-0.5, 0.6, -0.3, 0.4],
    ]
)
DENSE_4_2_B = np.array([0.05, -0.05])

CONV_TINY_KERNELS = np.array(
    [  # (kh, kw, in, out)
        [[[0.5, -0.25]], [[-0.5, 0.75]]],
        [[[0.25, 0.5]], [[-0.75, -0.25]]],
    ]
)
CONV_TINY_CONV_B = np.array([0.1, -0.1])
CONV_TINY_DENSE_W = np.array(
    [[((i + 2 * j) % 9 - 4) / 10.0 for j in range(18)] for i in range(2)]
)
CONV_TINY_DENSE_B = np.array([0.02, -0.02])


def _softmax(z):
    e = [math.exp(v - max(z)) for v in z]
    s = sum(e)
    return [v / s for v in e]


def _dense_4_2_doc() -> dict:
    return {
        "input_shape": [4],
        "num_classes": 2,
        "layers": [dense_doc(DENSE_4_2_W, DENSE_4_2_B), plain_doc("softmax")],
    }


def dense_4_2_forward(x) -> list[float]:
    x = np.asarray(x, dtype=np.float64).ravel()
    logits = [float(np.dot(row, x) + b) for row, b in zip(DENSE_4_2_W, DENSE_4_2_B)]
    return _softmax(logits)


def _conv_tiny_doc() -> dict:
    return {
        "input_shape": [4, 4, 1],
        "num_classes": 2,
        "layers": [
            conv2d_doc(CONV_TINY_KERNELS, CONV_TINY_CONV_B),
            plain_doc("relu"),
            plain_doc("flatten"),
            dense_doc(CONV_TINY_DENSE_W, CONV_TINY_DENSE_B),
            plain_doc("softmax"),
        ],
    }


def conv_tiny_forward(x) -> list[float]:
    x = np.asarray(x, dtype=np.float64).reshape(4, 4, 1)
    feature = np.zeros((3, 3, 2))
    for i in range(3):
        for j in range(3):
            for co in range(2):
                acc = CONV_TINY_CONV_B[co]
                for di in range(2):
                    for dj in range(2):
                        acc += x[i + di, j + dj, 0] * CONV_TINY_KERNELS[di, dj, 0, co]
                feature[i, j, co] = max(acc, 0.0)
    flat = feature.ravel()
    logits = [
        float(np.dot(CONV_TINY_DENSE_W[c], flat) + CONV_TINY_DENSE_B[c]) for c in range(2)
    ]
    return _softmax(logits)


CATALOG = {
    "dense-4-2": (_dense_4_2_doc, dense_4_2_forward, "4-input 2-class dense classifier"),
    "conv-tiny": (_conv_tiny_doc, conv_tiny_forward, "4x4x1 conv classifier with a dense head"),
}


def oracle_names() -> list[str]:
    return sorted(CATALOG)


def oracle_forward(name: str):
    """The catalog's own forward pass for cross-implementation checks."""
    try:
        return CATALOG[name][1]
    except KeyError:
        raise UnknownOracleError(f"unknown oracle network {name!r}; have {oracle_names()}")


def oracle_input_shape(name: str) -> tuple[int, ...]:
    try:
        return tuple(CATALOG[name][0]()["input_shape"])
    except KeyError:
        raise UnknownOracleError(f"unknown oracle network {name!r}; have {oracle_names()}")


def make_oracle_net(name: str, out_path: str | Path) -> ExportManifest:
    """Write one catalogued network as a portable model file."""
    try:
        builder, _, description = CATALOG[name]
    except KeyError:
        raise UnknownOracleError(f"unknown oracle network {name!r}; have {oracle_names()}")
    return write_portable(builder(), out_path, f"catalog:{name} ({description})")
