"""Operational U-Net for wildfire segmentation, built on a small numpy autodiff core.

The package is self-contained: reverse-mode tensors, generalized (polynomial)
convolution layers, the encoder/decoder model, Adam + a training loop,
dataset utilities with a synthetic fire generator, and finite-difference
gradient verification.
"""

from .conv import conv2d, conv2d_out_size, conv_transpose2d, conv_transpose2d_out_size
from .data import (
    DatasetManifest,
    PatchRecord,
    load_patch,
    normalize_patch,
    read_manifest,
    resize_bilinear,
    save_patch,
    select_channels,
    split_dataset,
    synth_generate,
    write_manifest,
)
from .errors import ConfigError, FormatError, NumericsError
from .gradcheck import check_layers, check_model
from .layers import OperationalConv2D, TransposedOperationalConv2D
from .metrics import ConfusionCounts, Scores, accumulate, scores
from .model import OpUNet, OpUNetConfig, load_checkpoint, save_checkpoint
from .optim import Adam, TrainConfig, TrainResult, evaluate, train
from .tensor import (
    Tensor,
    add,
    backward,
    bce_loss,
    concat_channels,
    mul,
    no_grad,
    power,
    sigmoid,
    tanh,
    tensor_sum,
)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "ConfigError",
    "ConfusionCounts",
    "DatasetManifest",
    "FormatError",
    "NumericsError",
    "OpUNet",
    "OpUNetConfig",
    "OperationalConv2D",
    "PatchRecord",
    "Scores",
    "Tensor",
    "TrainConfig",
    "TrainResult",
    "TransposedOperationalConv2D",
    "accumulate",
    "add",
    "backward",
    "bce_loss",
    "check_layers",
    "check_model",
    "concat_channels",
    "conv2d",
    "conv2d_out_size",
    "conv_transpose2d",
    "conv_transpose2d_out_size",
    "evaluate",
    "load_checkpoint",
    "load_patch",
    "mul",
    "no_grad",
    "normalize_patch",
    "power",
    "read_manifest",
    "resize_bilinear",
    "save_patch",
    "scores",
    "select_channels",
    "sigmoid",
    "split_dataset",
    "synth_generate",
    "tanh",
    "tensor_sum",
    "train",
    "write_manifest",
]
