"""Generate a synthetic fire dataset and export a few patches for viewing.

Each patch imitates the 3-channel composite used for training: smooth
background clutter, plus elliptical hot spots that are brightest in the
first (shortwave-IR-like) channel. Masks mark where the hot-spot signal
exceeds a fixed threshold, so labels are geometrically consistent with
the imagery by construction.

Writes per-channel PGMs and the mask for the first few patches to
demos/out/ so they can be eyeballed with any image viewer.

    python3 demos/04_synthetic_fires.py
"""

import os

import numpy as np

from opunet.data import normalize_bands, split_dataset, synth_generate
from opunet.pgm import quantize_probabilities, write_pgm

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)

records = synth_generate(seed=0, count=60, size=64)

fracs = np.array([r.mask.mean() for r in records])
print(f"{len(records)} patches of 64x64")
print(f"fire fraction: mean {fracs.mean():.3f}, max {fracs.max():.3f}, "
      f"{int((fracs == 0).sum())} patches with no fire")

manifest = split_dataset([r.id for r in records], seed=0)
print(f"split sizes: train {len(manifest.train)}, val {len(manifest.val)}, "
      f"test {len(manifest.test)}")

for rec in records[:3]:
    # scale each channel to [0, 1] for display (the model sees [-1, 1])
    display = (normalize_bands(rec.bands) + 1.0) / 2.0
    for c in range(3):
        write_pgm(quantize_probabilities(display[c]),
                  os.path.join(out_dir, f"{rec.id}_c{c}.pgm"))
    write_pgm(rec.mask * 255, os.path.join(out_dir, f"{rec.id}_mask.pgm"))
    print(f"wrote {rec.id}: {int(rec.mask.sum())} fire pixels")

print(f"\nimages in {out_dir}")
