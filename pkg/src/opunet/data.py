"""Patch ingestion, normalization, splits, and a synthetic fire generator.

A patch is a small multispectral image (band-major float32) plus a binary
ground-truth mask. Raw 10-band patches get reduced to a 3-band composite
(shortwave-IR heavy, so active fire stands out), then each channel is
linearly rescaled per patch so its own min/max map to -1/+1.

LS8P patch file (little-endian):
  magic "LS8P" | u16 version=1 | u16 band count | u32 height | u32 width |
  u8 dtype=0 (float32) | u8 reserved=0 | band-major float32 data (B*H*W) |
  mask as H*W unsigned bytes, each 0 or 1.

Manifests are plain text, one patch path per line (train.txt / val.txt /
test.txt); relative paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import dataclasses
import os
import struct

import numpy as np

from .errors import FormatError

LS8P_MAGIC = b"LS8P"
LS8P_VERSION = 1

# Composite channel order: bands 7, 6, 2 of a 10-band patch, mapped to R, G, B.
COMPOSITE_BANDS = (7, 6, 2)

MIN_SYNTH_SIZE = 16

# Per-channel intensity of a fire blob in the composite (R, G, B).
BLOB_CHANNEL_GAIN = (1.0, 0.6, 0.1)
# A pixel is labelled fire where the summed R-channel blob contribution
# exceeds this value.
BLOB_MASK_THRESHOLD = 0.25
BACKGROUND_MAX = 0.4


@dataclasses.dataclass
class PatchRecord:
    """One patch: bands (B, H, W) float32, mask (H, W) uint8 in {0, 1}."""

    bands: np.ndarray
    mask: np.ndarray
    id: str = ""

    def __post_init__(self):
        if self.bands.ndim != 3:
            raise ValueError(f"bands must be (B, H, W), got shape {self.bands.shape}")
        if self.mask.shape != self.bands.shape[1:]:
            raise ValueError(
                f"mask shape {self.mask.shape} does not match bands {self.bands.shape[1:]}")
        if not np.all((self.mask == 0) | (self.mask == 1)):
            raise ValueError("mask must be strictly binary")


@dataclasses.dataclass
class DatasetManifest:
    """Disjoint train/val/test path lists in 40/10/50 proportions."""

    train: list
    val: list
    test: list


def select_channels(p: PatchRecord) -> PatchRecord:
    """Reduce a 10-band patch to the 3-channel composite (bands 7, 6, 2)."""
    if p.bands.shape[0] != 10:
        raise ValueError(f"channel selection expects 10 bands, got {p.bands.shape[0]}")
    idx = [b - 1 for b in COMPOSITE_BANDS]
    return PatchRecord(p.bands[idx].copy(), p.mask.copy(), p.id)


def normalize_bands(bands: np.ndarray) -> np.ndarray:
    """Rescale each channel so its own min/max map to -1/+1 exactly.

    A constant channel has no range to stretch and maps to all zeros.
    """
    out = np.empty_like(bands)
    for c in range(bands.shape[0]):
        lo = bands[c].min()
        hi = bands[c].max()
        if hi == lo:
            out[c] = 0.0
        else:
            out[c] = 2.0 * (bands[c] - lo) / (hi - lo) - 1.0
    return out


def normalize_patch(p: PatchRecord) -> PatchRecord:
    return PatchRecord(normalize_bands(p.bands), p.mask.copy(), p.id)


def _bilinear_resize_2d(channel: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable bilinear resize, half-pixel centres, edge clamped.

    Sample position for output index i is (i + 0.5) * (in / out) - 0.5.
    """
    in_h, in_w = channel.shape

    def axis_coords(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        i0 = np.floor(src).astype(np.int64)
        frac = (src - i0).astype(channel.dtype)
        lo = np.clip(i0, 0, n_in - 1)
        hi = np.clip(i0 + 1, 0, n_in - 1)
        return lo, hi, frac

    y0, y1, fy = axis_coords(in_h, out_h)
    x0, x1, fx = axis_coords(in_w, out_w)
    rows = channel[y0] * (1 - fy)[:, None] + channel[y1] * fy[:, None]
    return rows[:, x0] * (1 - fx) + rows[:, x1] * fx


def _nearest_resize_2d(channel: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    # Same half-pixel-centre rule, rounded half-up to the nearest source pixel.
    in_h, in_w = channel.shape
    ys = np.clip(np.floor((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5 + 0.5), 0, in_h - 1).astype(np.int64)
    xs = np.clip(np.floor((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5 + 0.5), 0, in_w - 1).astype(np.int64)
    return channel[np.ix_(ys, xs)]


def resize_bilinear(p: PatchRecord, target: int) -> PatchRecord:
    """Resize bands bilinearly to target x target; mask by nearest neighbour.

    Nearest neighbour keeps the mask strictly binary (bilinear would
    produce fractional labels).
    """
    if target < 1:
        raise ValueError(f"target size must be >= 1, got {target}")
    bands = np.stack([_bilinear_resize_2d(c, target, target) for c in p.bands])
    mask = _nearest_resize_2d(p.mask, target, target)
    return PatchRecord(bands.astype(p.bands.dtype), mask.copy(), p.id)


def split_dataset(ids, seed) -> DatasetManifest:
    """Seeded shuffle, then a 40/10/50 cut (floor rounding on train and val)."""
    ids = list(ids)
    n = len(ids)
    if n < 3:
        raise ValueError(f"need at least 3 ids to split, got {n}")
    order = np.random.default_rng(int(seed)).permutation(n)
    shuffled = [ids[i] for i in order]
    n_train = (4 * n) // 10
    n_val = n // 10
    return DatasetManifest(
        train=shuffled[:n_train],
        val=shuffled[n_train:n_train + n_val],
        test=shuffled[n_train + n_val:],
    )


def save_patch(p: PatchRecord, path):
    bands = np.ascontiguousarray(p.bands, dtype="<f4")
    b, h, w = bands.shape
    with open(path, "wb") as f:
        f.write(LS8P_MAGIC)
        f.write(struct.pack("<HHII", LS8P_VERSION, b, h, w))
        f.write(struct.pack("<BB", 0, 0))
        f.write(bands.tobytes())
        f.write(p.mask.astype(np.uint8).tobytes())


def load_patch(path) -> PatchRecord:
    with open(path, "rb") as f:
        raw = f.read()
    header = 4 + 2 + 2 + 4 + 4 + 2
    if len(raw) < header:
        raise FormatError(f"{path}: truncated header")
    if raw[:4] != LS8P_MAGIC:
        raise FormatError(f"{path}: not a patch file (bad magic bytes)")
    version, b, h, w = struct.unpack("<HHII", raw[4:16])
    dtype_code, reserved = struct.unpack("<BB", raw[16:18])
    if version != LS8P_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype_code != 0:
        raise FormatError(f"{path}: unsupported dtype code {dtype_code}")
    if b < 1 or h < 1 or w < 1:
        raise FormatError(f"{path}: bad dimensions {b}x{h}x{w}")
    expected = header + b * h * w * 4 + h * w
    if len(raw) != expected:
        raise FormatError(f"{path}: file length {len(raw)} does not match header ({expected} expected)")
    bands = np.frombuffer(raw, dtype="<f4", count=b * h * w, offset=header).reshape(b, h, w).copy()
    mask = np.frombuffer(raw, dtype=np.uint8, offset=header + b * h * w * 4).reshape(h, w).copy()
    if not np.all((mask == 0) | (mask == 1)):
        raise FormatError(f"{path}: mask contains values other than 0/1")
    return PatchRecord(bands, mask, os.path.splitext(os.path.basename(path))[0])


def write_manifest(paths, out_path):
    with open(out_path, "w") as f:
        for p in paths:
            f.write(f"{p}\n")


def read_manifest(path):
    """Return the listed patch paths, resolved against the manifest's directory."""
    base = os.path.dirname(os.path.abspath(path))
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(line if os.path.isabs(line) else os.path.join(base, line))
    return out


def _smooth_noise(rng, size, high):
    """Value noise in [0, high]: a coarse uniform grid upsampled bilinearly."""
    knots = max(2, size // 8) + 1
    grid = rng.uniform(0.0, high, size=(knots, knots))
    return _bilinear_resize_2d(grid, size, size)


def synth_generate(seed, count, size, blob_count_range=(0, 4)):
    """Deterministic synthetic fire patches (3 bands + mask).

    Each patch is smooth background noise per channel plus 0..N anisotropic
    Gaussian fire blobs. A blob of amplitude a adds a * (1.0, 0.6, 0.1) * G
    to the three channels; the mask marks pixels whose summed R-channel
    blob contribution exceeds 0.25. Blob amplitudes start at 0.8, so every
    placed blob marks at least its own centre: masks are non-empty exactly
    when at least one blob was placed.
    """
    if size < MIN_SYNTH_SIZE:
        raise ValueError(f"size must be >= {MIN_SYNTH_SIZE}, got {size}")
    lo, hi = int(blob_count_range[0]), int(blob_count_range[1])
    if lo < 0 or hi < lo:
        raise ValueError(f"bad blob count range {blob_count_range}")
    rng = np.random.default_rng(int(seed))
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    records = []
    for i in range(count):
        background = np.stack([_smooth_noise(rng, size, BACKGROUND_MAX) for _ in range(3)])
        contribution = np.zeros((size, size), dtype=np.float64)
        n_blobs = int(rng.integers(lo, hi + 1))
        for _ in range(n_blobs):
            cy, cx = rng.uniform(0, size - 1, size=2)
            theta = rng.uniform(0, np.pi)
            # Floors in pixels keep even the thinnest blob's peak above the
            # mask threshold at its nearest grid point.
            sigma_major = max(rng.uniform(0.06 * size, 0.15 * size), 1.5)
            sigma_minor = max(sigma_major * rng.uniform(0.35, 0.9), 1.2)
            amplitude = rng.uniform(0.8, 1.6)
            ct, st = np.cos(theta), np.sin(theta)
            u = (xx - cx) * ct + (yy - cy) * st
            v = -(xx - cx) * st + (yy - cy) * ct
            contribution += amplitude * np.exp(
                -0.5 * ((u / sigma_major) ** 2 + (v / sigma_minor) ** 2))
        bands = background + np.asarray(BLOB_CHANNEL_GAIN)[:, None, None] * contribution
        mask = (contribution > BLOB_MASK_THRESHOLD).astype(np.uint8)
        records.append(PatchRecord(bands.astype(np.float32), mask, f"synth-{i:04d}"))
    return records
