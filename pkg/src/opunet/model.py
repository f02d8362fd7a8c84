"""The operational U-Net: encoder/decoder with skip connections.

Five operational layers downsample (each followed by tanh), five
transposed operational layers upsample. The first decoder stage consumes
the bottleneck; each later stage consumes its predecessor concatenated
with the matching-resolution encoder activation. The skip taps post-tanh
activations so every layer input stays inside (-1, 1), which is what makes
the polynomial expansion well behaved. The last stage ends in a sigmoid,
giving a per-pixel probability map.

Strides of 2 halve/double resolution exactly at every stage: padding is
(k-1)/2 with output_padding 1 for odd kernels, k/2-1 with output_padding 0
for even ones — which is why the final upsampling layer can use an even
kernel (6) with no output padding.

Checkpoint format (little-endian):
  magic "OPUN" | u16 version=1 | u32 config-JSON length | config JSON |
  u32 tensor count | per tensor: u16 name length, UTF-8 name ("enc1.w",
  "enc1.b", ..., "dec5.b"), u8 rank, u32 dims[rank], float32 data.
"""

from __future__ import annotations

import dataclasses
import json
import struct

import numpy as np

from .errors import ConfigError, FormatError
from .layers import OperationalConv2D, TransposedOperationalConv2D
from .tensor import Tensor, concat_channels, no_grad, sigmoid, tanh

CHECKPOINT_MAGIC = b"OPUN"
CHECKPOINT_VERSION = 1

STAGES = 5


@dataclasses.dataclass
class OpUNetConfig:
    in_channels: int = 3
    encoder_widths: tuple = (12, 24, 48, 96, 192)
    q_order: int = 3
    encoder_kernel: int = 5
    decoder_kernel: int = 5
    last_decoder_kernel: int = 6
    stride: int = 2
    input_size: int = 256

    def __post_init__(self):
        self.encoder_widths = tuple(int(w) for w in self.encoder_widths)
        if len(self.encoder_widths) != STAGES:
            raise ConfigError(f"encoder_widths must list exactly {STAGES} widths, got {len(self.encoder_widths)}")
        if any(w < 1 for w in self.encoder_widths):
            raise ConfigError("encoder_widths must be positive")
        for name in ("in_channels", "q_order", "encoder_kernel", "decoder_kernel",
                     "last_decoder_kernel", "stride", "input_size"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.input_size % self.stride ** STAGES != 0:
            raise ConfigError(
                f"input_size ({self.input_size}) must be divisible by stride^{STAGES} ({self.stride ** STAGES})")

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["encoder_widths"] = list(self.encoder_widths)
        return d

    @classmethod
    def from_dict(cls, d):
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - fields
        if unknown:
            raise ConfigError(f"unknown model config key '{sorted(unknown)[0]}'")
        return cls(**d)


def _halving_padding(k):
    # Exact spatial halving under stride 2 (floor division absorbs odd k).
    return (k - 1) // 2 if k % 2 else k // 2 - 1


def _doubling_geometry(k):
    # padding, output_padding giving exact spatial doubling under stride 2.
    if k % 2:
        return (k - 1) // 2, 1
    return k // 2 - 1, 0


class OpUNet:
    """Wired layer graph; build once from a config and a seed."""

    def __init__(self, config: OpUNetConfig, seed=0, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        w = config.encoder_widths
        q = config.q_order
        s = config.stride
        ke, kd, kl = config.encoder_kernel, config.decoder_kernel, config.last_decoder_kernel

        enc_in = (config.in_channels,) + w[:-1]
        self.encoder = [
            OperationalConv2D(enc_in[i], w[i], ke, q, s, _halving_padding(ke), dtype=dtype)
            for i in range(STAGES)
        ]

        dec_in = (w[4], 2 * w[3], 2 * w[2], 2 * w[1], 2 * w[0])
        dec_out = (w[3], w[2], w[1], w[0], 1)
        self.decoder = []
        for i in range(STAGES):
            k = kl if i == STAGES - 1 else kd
            pad, out_pad = _doubling_geometry(k)
            self.decoder.append(TransposedOperationalConv2D(
                dec_in[i], dec_out[i], k, q, s, pad, out_pad, dtype=dtype))

        rng = np.random.default_rng(int(seed))
        for layer in self.encoder + self.decoder:
            layer.initialize(rng)

    def named_parameters(self):
        out = []
        for i, layer in enumerate(self.encoder, start=1):
            out += [(f"enc{i}.w", layer.weights), (f"enc{i}.b", layer.bias)]
        for i, layer in enumerate(self.decoder, start=1):
            out += [(f"dec{i}.w", layer.weights), (f"dec{i}.b", layer.bias)]
        return out

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def count_params(self):
        return sum(int(p.data.size) for p in self.parameters())

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state):
        for name, p in self.named_parameters():
            if name not in state:
                raise FormatError(f"missing tensor '{name}'")
            if state[name].shape != p.data.shape:
                raise FormatError(
                    f"shape mismatch for '{name}': got {tuple(state[name].shape)}, "
                    f"expected {tuple(p.data.shape)}")
            p.data[...] = state[name].astype(self.dtype)

    def _check_input(self, x: Tensor):
        c, s = self.config.in_channels, self.config.input_size
        if x.data.ndim != 4 or x.shape[1] != c or x.shape[2] != s or x.shape[3] != s:
            raise ValueError(
                f"expected input of shape (N, {c}, {s}, {s}), got {tuple(x.shape)}")

    def forward(self, x: Tensor) -> Tensor:
        """(N, Cin, S, S) -> probability map (N, 1, S, S), values in (0, 1)."""
        self._check_input(x)
        skips = []
        h = x
        for layer in self.encoder:
            h = tanh(layer(h))
            skips.append(h)
        h = tanh(self.decoder[0](skips[4]))
        for i in range(1, STAGES):
            h = concat_channels(h, skips[4 - i])
            h = self.decoder[i](h)
            h = sigmoid(h) if i == STAGES - 1 else tanh(h)
        return h

    __call__ = forward

    def predict_mask(self, x: Tensor, threshold=0.5) -> Tensor:
        """Binary {0,1} mask from thresholding the probability map (p >= t)."""
        if not 0.0 <= threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
        with no_grad():
            prob = self.forward(x)
        return Tensor((prob.data >= threshold).astype(self.dtype))

    def stage_summary(self):
        """Per-layer rows: (name, kind, cin, cout, k, stride, res_in, res_out, params)."""
        rows = []
        res = self.config.input_size
        for i, layer in enumerate(self.encoder, start=1):
            nxt = res // self.config.stride
            rows.append((f"enc{i}", "op_conv", layer.in_channels, layer.out_channels,
                         layer.kernel_size, layer.stride, res, nxt,
                         int(layer.weights.size + layer.bias.size)))
            res = nxt
        for i, layer in enumerate(self.decoder, start=1):
            nxt = res * self.config.stride
            rows.append((f"dec{i}", "op_conv_t", layer.in_channels, layer.out_channels,
                         layer.kernel_size, layer.stride, res, nxt,
                         int(layer.weights.size + layer.bias.size)))
            res = nxt
        return rows


def _read_exact(f, n, what):
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated checkpoint while reading {what}")
    return buf


def save_checkpoint(model: OpUNet, path):
    """Write model parameters (always stored as float32) and config."""
    cfg = json.dumps(model.config.to_dict()).encode("utf-8")
    named = model.named_parameters()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<H", CHECKPOINT_VERSION))
        f.write(struct.pack("<I", len(cfg)))
        f.write(cfg)
        f.write(struct.pack("<I", len(named)))
        for name, p in named:
            nb = name.encode("utf-8")
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            arr = p.data.astype("<f4", copy=False)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def load_checkpoint(path, config: OpUNetConfig | None = None, dtype=np.float32) -> OpUNet:
    """Rebuild a model from a checkpoint file.

    If config is given, the checkpoint must match it exactly (tensor
    shapes included); otherwise the config embedded in the file is used.
    """
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != CHECKPOINT_MAGIC:
            raise FormatError("not a model checkpoint (bad magic bytes)")
        (version,) = struct.unpack("<H", _read_exact(f, 2, "version"))
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        (cfg_len,) = struct.unpack("<I", _read_exact(f, 4, "config length"))
        try:
            cfg_dict = json.loads(_read_exact(f, cfg_len, "config"))
        except json.JSONDecodeError as e:
            raise FormatError(f"corrupt config block: {e}") from e
        file_config = OpUNetConfig.from_dict(cfg_dict)
        (count,) = struct.unpack("<I", _read_exact(f, 4, "tensor count"))

        state = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2, "name length"))
            name = _read_exact(f, name_len, "name").decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(f, 1, "rank"))
            dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank, "dims"))
            n_items = int(np.prod(dims, dtype=np.int64)) if rank else 1
            raw = _read_exact(f, 4 * n_items, f"data of '{name}'")
            state[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
        if f.read(1):
            raise FormatError("trailing bytes after last tensor")

    model = OpUNet(config or file_config, seed=0, dtype=dtype)
    expected = len(model.named_parameters())
    if count != expected:
        raise FormatError(f"tensor count {count} does not match the {expected} expected")
    model.load_state_dict(state)
    return model
