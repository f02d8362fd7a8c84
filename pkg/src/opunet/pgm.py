"""Binary PGM (P5) images — dependency-free mask and probability export."""

from __future__ import annotations

import numpy as np

from .errors import FormatError


def write_pgm(image: np.ndarray, path):
    """Write a 2-D uint8 array as a P5 file with maxval 255."""
    if image.ndim != 2:
        raise ValueError(f"PGM image must be 2-D, got shape {image.shape}")
    h, w = image.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a P5 file with maxval 255; tolerates comments and any whitespace."""
    with open(path, "rb") as f:
        raw = f.read()

    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(raw):
        while i < len(raw) and raw[i:i + 1].isspace():
            i += 1
        if i < len(raw) and raw[i:i + 1] == b"#":
            while i < len(raw) and raw[i:i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(raw) and not raw[i:i + 1].isspace():
            i += 1
        if i > start:
            tokens.append(raw[start:i])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as e:
        raise FormatError(f"{path}: bad PGM header") from e
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    i += 1  # single whitespace byte after maxval
    data = raw[i:i + w * h]
    if len(data) != w * h:
        raise FormatError(f"{path}: truncated pixel data")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w).copy()


def quantize_probabilities(prob: np.ndarray) -> np.ndarray:
    """Map probabilities in [0, 1] to uint8 levels, rounding half up."""
    return np.floor(np.clip(prob, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
