"""Input tensors on disk: the shape-headed CSV format and 8-bit netpbm images."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputError


def load_input(path: str | Path) -> np.ndarray:
    """Load a [0,1]-valued tensor from .csv (exact) or .pgm/.ppm (8-bit)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return _load_csv(path)
    if suffix in (".pgm", ".ppm"):
        return _load_netpbm(path)
    raise InputError(f"unsupported input format {suffix!r}; use .csv, .pgm or .ppm")


def _load_csv(path: Path) -> np.ndarray:
    text = path.read_text().strip().splitlines()
    if not text or not text[0].startswith("shape:"):
        raise InputError(f"{path}: first line must be 'shape:h,w,c'")
    try:
        shape = tuple(int(s) for s in text[0][len("shape:") :].split(","))
    except ValueError as exc:
        raise InputError(f"{path}: malformed shape header") from exc
    values = []
    for line in text[1:]:
        for cell in line.replace(",", " ").split():
            values.append(float(cell))
    arr = np.asarray(values, dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise InputError(f"{path}: expected {int(np.prod(shape))} values, got {arr.size}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise InputError(f"{path}: values must lie in [0, 1]")
    return arr.reshape(shape)


def save_csv(x: np.ndarray, path: str | Path) -> None:
    x = np.asarray(x, dtype=np.float64)
    lines = ["shape:" + ",".join(str(s) for s in x.shape)]
    lines.extend(repr(float(v)) for v in x.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def _load_netpbm(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4 and pos < len(data):
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        if data[pos : pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if len(fields) < 4:
        raise InputError(f"{path}: truncated netpbm header")
    magic = fields[0].decode("ascii", "replace")
    if magic not in ("P2", "P3", "P5", "P6"):
        raise InputError(f"{path}: unsupported netpbm magic {magic}")
    w, h, maxval = (int(f) for f in fields[1:4])
    if maxval != 255:
        raise InputError(f"{path}: only 8-bit images are supported (maxval {maxval})")
    channels = 3 if magic in ("P3", "P6") else 1
    count = w * h * channels
    if magic in ("P5", "P6"):
        raw = np.frombuffer(data[pos + 1 : pos + 1 + count], dtype=np.uint8)
    else:
        raw = np.asarray(data[pos:].split()[:count], dtype=np.uint8)
    if raw.size != count:
        raise InputError(f"{path}: expected {count} samples, got {raw.size}")
    return (raw.astype(np.float64) / 255.0).reshape(h, w, channels)


def save_netpbm(x: np.ndarray, path: str | Path) -> None:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, :, np.newaxis]
    if x.ndim != 3 or x.shape[2] not in (1, 3):
        raise InputError(f"cannot write shape {x.shape} as a netpbm image")
    h, w, c = x.shape
    magic = b"P5" if c == 1 else b"P6"
    body = np.round(x * 255.0).astype(np.uint8).tobytes()
    Path(path).write_bytes(magic + f"\n{w} {h}\n255\n".encode("ascii") + body)


def save_witness(x: np.ndarray, base_path: str | Path) -> list[str]:
    """Write a witness in both formats; returns the written paths."""
    base_path = Path(base_path)
    x = np.asarray(x, dtype=np.float64)
    csv_path = base_path.with_suffix(".csv")
    save_csv(x, csv_path)
    written = [str(csv_path)]
    if x.ndim == 3 and x.shape[2] in (1, 3):
        img_path = base_path.with_suffix(".pgm" if x.shape[2] == 1 else ".ppm")
        save_netpbm(x, img_path)
        written.append(str(img_path))
    return written
