"""Operational convolution layers built from per-power kernel banks.

An operational layer generalises a convolution: instead of a single linear
response it applies a learned polynomial of the input,

    out = bias + sum_{q=1..Q} conv(x^q, W_q)

so each neuron shapes its own nonlinearity through the coefficients
W_1..W_Q. With Q = 1 this collapses arithmetically to a plain convolution.
Inputs are assumed (not enforced) to be bounded in (-1, 1) by a preceding
tanh; the model module is responsible for that placement.

The transposed variant applies the same polynomial over the transposed
convolution, for learned upsampling.
"""

from __future__ import annotations

import numpy as np

from .conv import conv2d, conv_transpose2d
from .tensor import Tensor, power, take


def _init_bank(rng, q_order, cout, cin, k, dtype):
    """Uniform fan-based init with a 1/q taper per power bank.

    Higher powers of inputs in (-1, 1) shrink, so the taper keeps the
    per-term output variance comparable at startup. Bias starts at zero.
    """
    bound = np.sqrt(6.0 / ((cin + cout) * k * k))
    banks = [rng.uniform(-bound / q, bound / q, size=(cout, cin, k, k))
             for q in range(1, q_order + 1)]
    return np.stack(banks).astype(dtype)


def _as_rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(int(seed_or_rng))


class OperationalConv2D:
    """Downsampling/featurizing polynomial convolution layer.

    weights: (Q, Cout, Cin, k, k) — one kernel bank per power.
    bias: (Cout,) — the polynomial's constant term, shared across powers.
    """

    transposed = False

    def __init__(self, in_channels, out_channels, kernel_size, q_order=3,
                 stride=1, padding=0, dtype=np.float32):
        if q_order < 1:
            raise ValueError(f"q_order must be >= 1, got {q_order}")
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel_size = int(kernel_size)
        self.q_order = int(q_order)
        self.stride = int(stride)
        self.padding = int(padding)
        self.weights = Tensor(
            np.zeros((q_order, out_channels, in_channels, kernel_size, kernel_size), dtype=dtype),
            requires_grad=True)
        self.bias = Tensor(np.zeros(out_channels, dtype=dtype), requires_grad=True)

    def initialize(self, seed_or_rng):
        """Fill parameters deterministically; same seed, same bits."""
        rng = _as_rng(seed_or_rng)
        self.weights.data[...] = _init_bank(
            rng, self.q_order, self.out_channels, self.in_channels,
            self.kernel_size, self.weights.dtype)
        self.bias.data[...] = 0.0
        return self

    def parameters(self):
        return [self.weights, self.bias]

    def _apply(self, conv_fn, x, **kw):
        out = None
        for i in range(self.q_order):
            term = conv_fn(power(x, i + 1), take(self.weights, i),
                           self.bias if i == 0 else None,
                           stride=self.stride, padding=self.padding, **kw)
            out = term if out is None else out + term
        return out

    def __call__(self, x: Tensor) -> Tensor:
        return self._apply(conv2d, x)


class TransposedOperationalConv2D(OperationalConv2D):
    """Upsampling polynomial layer; weights: (Q, Cin, Cout, k, k)."""

    transposed = True

    def __init__(self, in_channels, out_channels, kernel_size, q_order=3,
                 stride=1, padding=0, output_padding=0, dtype=np.float32):
        if output_padding >= stride:
            raise ValueError(f"output_padding ({output_padding}) must be smaller than stride ({stride})")
        super().__init__(in_channels, out_channels, kernel_size, q_order,
                         stride, padding, dtype)
        self.output_padding = int(output_padding)
        self.weights = Tensor(
            np.zeros((q_order, in_channels, out_channels, kernel_size, kernel_size), dtype=dtype),
            requires_grad=True)

    def initialize(self, seed_or_rng):
        rng = _as_rng(seed_or_rng)
        # Fan-based bound is symmetric in (Cin, Cout); only the layout differs.
        self.weights.data[...] = _init_bank(
            rng, self.q_order, self.in_channels, self.out_channels,
            self.kernel_size, self.weights.dtype)
        self.bias.data[...] = 0.0
        return self

    def __call__(self, x: Tensor) -> Tensor:
        return self._apply(conv_transpose2d, x, output_padding=self.output_padding)
