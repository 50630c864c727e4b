"""Partition input dimensions into disjoint features for the first player."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .nn import Network, classify, forward_batch


@dataclass(frozen=True)
class FeaturePartition:
    """Ordered disjoint cover of the input dimensions; feature 0 ranks first."""

    features: tuple[tuple[int, ...], ...]
    method: str

    def __post_init__(self):
        seen: set[int] = set()
        for dims in self.features:
            if not dims:
                raise InputError("empty feature in partition")
            if seen.intersection(dims):
                raise InputError("features overlap")
            seen.update(dims)
        if seen != set(range(len(seen))) or not seen:
            raise InputError("features do not cover the input dimensions exactly")

    @property
    def n_dims(self) -> int:
        return sum(len(f) for f in self.features)

    def __len__(self) -> int:
        return len(self.features)


def _rank_blocks(order: list[int], count: int) -> tuple[tuple[int, ...], ...]:
    n = len(order)
    sizes = [n // count + 1] * (n % count) + [n // count] * (count - n % count)
    blocks, start = [], 0
    for size in sizes:
        blocks.append(tuple(order[start : start + size]))
        start += size
    return tuple(blocks)


def saliency_partition(
    net: Network, x: np.ndarray, feature_count: int, probe: float
) -> FeaturePartition:
    """Rank dimensions by finite-difference sensitivity of the top class.

    Dimension i scores |N(x + probe*e_i, c*) - N(x, c*)| plus the same for the
    negative probe, with probes clamped into [0, 1]. Sorted dims (descending
    score, ties by index) are cut into near-equal rank blocks, so the first
    feature concentrates the most salient dimensions.
    """
    flat = np.asarray(x, dtype=np.float64).ravel()
    n = flat.size
    if not 1 <= feature_count <= n:
        raise InputError(f"feature count {feature_count} out of range for {n} dims")
    if probe <= 0:
        raise InputError(f"probe must be positive, got {probe}")
    top = classify(net, x)
    batch = np.repeat(flat[np.newaxis, :], 2 * n + 1, axis=0)
    for i in range(n):
        batch[2 * i, i] = min(1.0, flat[i] + probe)
        batch[2 * i + 1, i] = max(0.0, flat[i] - probe)
    probs = forward_batch(net, batch)[:, top]
    ref = probs[-1]
    scores = np.abs(probs[0:-1:2] - ref) + np.abs(probs[1:-1:2] - ref)
    order = np.argsort(-scores, kind="stable").tolist()
    return FeaturePartition(_rank_blocks(order, feature_count), "saliency")


def block_partition(shape, feature_count: int) -> FeaturePartition:
    """Deterministic geometric stand-in: near-equal scanline runs of pixels.

    Pixels are ordered along the longer image axis (rows first on ties) and
    split into contiguous runs whose sizes differ by at most one; every channel
    of a pixel follows the pixel.
    """
    shape = tuple(int(s) for s in shape)
    if len(shape) == 2:
        h, w, c = shape[0], shape[1], 1
    elif len(shape) == 3:
        h, w, c = shape
    else:
        raise InputError(f"expected an (h, w) or (h, w, c) shape, got {shape}")
    pixels = h * w
    if not 1 <= feature_count <= pixels:
        raise InputError(f"feature count {feature_count} out of range for {pixels} pixels")
    if h >= w:
        pixel_order = [(r, col) for r in range(h) for col in range(w)]
    else:
        pixel_order = [(r, col) for col in range(w) for r in range(h)]
    runs = _rank_blocks(list(range(pixels)), feature_count)
    features = []
    for run in runs:
        dims = []
        for p in run:
            r, col = pixel_order[p]
            dims.extend((r * w + col) * c + ch for ch in range(c))
        features.append(tuple(dims))
    return FeaturePartition(tuple(features), "blocks")


def partition_to_csv(partition: FeaturePartition) -> str:
    """Audit dump: one (dim_index, feature_id) row per dimension, 1-based ids."""
    rows = {}
    for fid, dims in enumerate(partition.features, start=1):
        for dim in dims:
            rows[dim] = fid
    out = io.StringIO()
    out.write("dim_index,feature_id\n")
    for dim in sorted(rows):
        out.write(f"{dim},{rows[dim]}\n")
    return out.getvalue()
