#!/usr/bin/env python3
"""Augmentation demo: expand a pair manifest with rotations and flips.

The same rigid transform is applied to both members of every pair, so the
augmented entries stay pixel-aligned; an 8x expansion (4 rotations x 2
flip states) is the maximum this policy produces.
"""

from pathlib import Path

import numpy as np
from scipy import ndimage

from srpair.degrade import AugmentPolicy, DegradationSpec, augment_pairs, build_interpolation_pairs
from srpair.image import ImageBuffer, write_png

OUT = Path(__file__).parent / "output" / "augmentation"


def main():
    hr_dir = OUT / "hr_source"
    hr_dir.mkdir(parents=True, exist_ok=True)
    for i in range(2):
        rng = np.random.default_rng(70 + i)
        chans = []
        for _ in range(3):
            base = rng.random((18, 18))
            chans.append(np.clip(ndimage.zoom(base, 8, order=3), 0, 1)[:128, :128])
        write_png(ImageBuffer(np.stack(chans, axis=-1)), hr_dir / f"img{i}.png")

    manifest = build_interpolation_pairs(hr_dir, DegradationSpec(scale=2), OUT / "pairs")
    print(f"base manifest: {len(manifest.entries)} pairs")

    policy = AugmentPolicy(rotations=(90, 180, 270), hflip=True)
    augmented = augment_pairs(manifest, policy, OUT / "pairs", OUT / "pairs")
    augmented.write(OUT / "pairs" / "manifest.json")
    print(f"after rotations {policy.rotations} + hflip: {len(augmented.entries)} entries")
    for entry in augmented.entries[:10]:
        print(f"  {entry.lr:28s} {entry.provenance or '(original)'}")
    print("  ...")


if __name__ == "__main__":
    main()
