"""Finite-difference verification of the analytic gradients.

Everything runs in float64: float32 rounding noise would drown the
central-difference comparison. The reported figure per parameter group is

    max over elements of |analytic - numeric| / max(1, |analytic|)

Layer scope checks every element of every parameter and of the input,
across a grid of polynomial orders, kernel sizes, and strides, for both
layer directions. Model scope runs a reduced network end to end through
the loss and samples a seeded subset of coordinates per tensor (full
enumeration there would cost minutes for no extra signal).
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .layers import OperationalConv2D, TransposedOperationalConv2D
from .model import OpUNet, OpUNetConfig
from .tensor import Tensor, backward, bce_loss, mul, no_grad, tensor_sum

LAYER_TOLERANCE = 1e-5
MODEL_TOLERANCE = 1e-4

LAYER_GRID = {
    "q_orders": (1, 2, 3),
    "kernels": (1, 3, 5, 6),
    "strides": (1, 2),
}

REDUCED_WIDTHS = (2, 3, 4, 5, 6)
REDUCED_INPUT = 32


@dataclasses.dataclass
class GroupResult:
    name: str
    max_err: float
    tolerance: float

    @property
    def passed(self):
        return self.max_err < self.tolerance


def _central_diff(value_fn, arr, indices, h):
    flat = arr.reshape(-1)
    out = np.zeros(len(indices))
    for j, i in enumerate(indices):
        orig = flat[i]
        flat[i] = orig + h
        fp = value_fn()
        flat[i] = orig - h
        fm = value_fn()
        flat[i] = orig
        out[j] = (fp - fm) / (2.0 * h)
    return out


def _group_error(analytic, value_fn, arr, indices, h):
    numeric = _central_diff(value_fn, arr, indices, h)
    a = analytic.reshape(-1)[indices]
    return float(np.max(np.abs(a - numeric) / np.maximum(1.0, np.abs(a))))


def _layer_case(transposed, q, k, stride, seed, h, corrupt=None):
    rng = np.random.default_rng(seed)
    cin, cout, size = 2, 3, 6
    pad = k // 2
    kind = "op_conv_t" if transposed else "op_conv"
    if transposed:
        out_pad = (stride - 1) if k % 2 else 0
        layer = TransposedOperationalConv2D(cin, cout, k, q, stride, pad, out_pad,
                                            dtype=np.float64)
    else:
        layer = OperationalConv2D(cin, cout, k, q, stride, pad, dtype=np.float64)
    layer.initialize(rng)
    x = Tensor(rng.uniform(-0.9, 0.9, size=(2, cin, size, size)), requires_grad=True)

    out = layer(x)
    probe = Tensor(rng.standard_normal(out.shape))
    backward(tensor_sum(mul(out, probe)))

    def value():
        with no_grad():
            return float(tensor_sum(mul(layer(x), probe)).data)

    prefix = f"{kind}[q={q},k={k},s={stride}]"
    results = []
    for part, tensor in (("weights", layer.weights), ("bias", layer.bias), ("input", x)):
        name = f"{prefix}.{part}"
        analytic = tensor.grad.copy()
        if corrupt is not None and corrupt in name:
            analytic = analytic + 1e-2
        indices = np.arange(tensor.data.size)
        results.append(GroupResult(name, _group_error(analytic, value, tensor.data, indices, h),
                                   LAYER_TOLERANCE))
    return results


def check_layers(seed=0, h=1e-5, q_orders=None, kernels=None, strides=None, corrupt=None):
    """Exhaustive per-element checks over the layer grid; a list of GroupResults.

    corrupt, when set to a substring of a group name, perturbs that group's
    analytic gradient before comparison — a negative control proving the
    check can fail.
    """
    results = []
    for transposed in (False, True):
        for q in q_orders or LAYER_GRID["q_orders"]:
            for k in kernels or LAYER_GRID["kernels"]:
                for s in strides or LAYER_GRID["strides"]:
                    results.extend(_layer_case(transposed, q, k, s, seed, h, corrupt))
    return results


def check_model(seed=0, h=1e-5, samples_per_tensor=24, corrupt=None):
    """End-to-end check of a reduced network through the BCE loss.

    Verifies a seeded random subset of coordinates in every parameter
    tensor and in the input.
    """
    rng = np.random.default_rng(seed)
    config = OpUNetConfig(encoder_widths=REDUCED_WIDTHS, input_size=REDUCED_INPUT)
    model = OpUNet(config, seed=seed, dtype=np.float64)
    x = Tensor(rng.uniform(-0.9, 0.9, size=(1, 3, REDUCED_INPUT, REDUCED_INPUT)),
               requires_grad=True)
    y = Tensor((rng.uniform(size=(1, 1, REDUCED_INPUT, REDUCED_INPUT)) < 0.2).astype(np.float64))

    backward(bce_loss(model.forward(x), y))

    def value():
        with no_grad():
            return float(bce_loss(model.forward(x), y).data)

    results = []
    groups = list(model.named_parameters()) + [("input", x)]
    for name, tensor in groups:
        full_name = f"model.{name}"
        n = tensor.data.size
        indices = rng.choice(n, size=min(samples_per_tensor, n), replace=False)
        analytic = tensor.grad.copy()
        if corrupt is not None and corrupt in full_name:
            analytic = analytic + 1e-2
        results.append(GroupResult(full_name, _group_error(analytic, value, tensor.data, indices, h),
                                   MODEL_TOLERANCE))
    return results
