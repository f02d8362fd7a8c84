"""Build the full segmentation network and poke at its anatomy.

Shows the encoder/decoder stage table, the parameter budget, a forward
pass at full resolution, and a checkpoint save/load round trip.

    python3 demos/03_build_model.py
"""

import os
import tempfile

import numpy as np

from opunet.model import OpUNet, OpUNetConfig, load_checkpoint, save_checkpoint
from opunet.tensor import Tensor

config = OpUNetConfig()          # 3 -> [12, 24, 48, 96, 192] -> 1, 256x256
model = OpUNet(config, seed=0)

print("stage table")
print(f"{'layer':<6} {'kind':<10} {'channels':<10} {'res':<10} {'params':>10}")
for name, kind, cin, cout, k, s, rin, rout, n in model.stage_summary():
    print(f"{name:<6} {kind:<10} {f'{cin}->{cout}':<10} {f'{rin}->{rout}':<10} {n:>10,}")
print(f"\ntotal parameters: {model.count_params():,}")

# a full-resolution forward pass; the output is a per-pixel probability
x = Tensor(np.random.default_rng(0).uniform(-1, 1, (1, 3, 256, 256)).astype(np.float32))
prob = model.forward(x)
print(f"\nforward: {tuple(x.shape)} -> {tuple(prob.shape)}, "
      f"range [{prob.data.min():.3f}, {prob.data.max():.3f}]")

mask = model.predict_mask(x, threshold=0.5)
print(f"thresholded mask: {int(mask.data.sum())} fire pixels of {mask.data.size}")

# checkpoints are self-describing: config + all tensors in one file
with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "model.opun")
    save_checkpoint(model, path)
    clone = load_checkpoint(path)
    same = all(np.array_equal(a.data, b.data)
               for (_, a), (_, b) in zip(model.named_parameters(),
                                         clone.named_parameters()))
    print(f"\ncheckpoint: {os.path.getsize(path):,} bytes, "
          f"round-trip bit-identical: {same}")
