#!/usr/bin/env python3
"""Video pairing demo: still-scene detection plus alignment.

Builds a synthetic dual-quality frame sequence (a sharp stream and a
half-resolution stream of the same content), finds the windows where the
scene holds still, and registers the selected frame pairs into training
entries. In practice the two frame directories come from decoding the
same footage at two bitrates.
"""

from pathlib import Path

import numpy as np
from scipy import ndimage

from srpair.degrade import StillSceneParams, build_video_pairs, extract_still_pairs
from srpair.image import ImageBuffer, write_png
from srpair.resample import resize_bicubic

OUT = Path(__file__).parent / "output" / "video"


def scene(seed, size=256) -> ImageBuffer:
    rng = np.random.default_rng(seed)
    chans = []
    for _ in range(3):
        base = rng.random((size // 8 + 2, size // 8 + 2))
        chans.append(np.clip(ndimage.zoom(base, 8, order=3), 0, 1)[:size, :size])
    return ImageBuffer(np.stack(chans, axis=-1))


def main():
    hr_dir = OUT / "frames_1080"
    lr_dir = OUT / "frames_360"
    hr_dir.mkdir(parents=True, exist_ok=True)
    lr_dir.mkdir(parents=True, exist_ok=True)

    # Two still shots separated by a camera pan.
    shot_a, shot_b = scene(1), scene(2)
    rng = np.random.default_rng(3)
    pan = [
        ImageBuffer(
            np.clip(np.roll(shot_a.data, 20 * (i + 1), axis=1)
                    + rng.normal(0, 0.05, shot_a.data.shape), 0, 1)
        )
        for i in range(4)
    ]
    frames = [shot_a] * 6 + pan + [shot_b] * 6
    for i, frame in enumerate(frames):
        write_png(frame, hr_dir / f"{i:06d}.png")
        write_png(resize_bicubic(frame, 0.5, antialias=True), lr_dir / f"{i:06d}.png")
    print(f"wrote {len(frames)} dual-quality frames")

    selected = extract_still_pairs(hr_dir, lr_dir, StillSceneParams(window=5))
    print(f"still windows centered at frames: {selected}")

    manifest = build_video_pairs(hr_dir, lr_dir, selected, out_dir=OUT / "pairs")
    manifest.write(OUT / "pairs" / "manifest.json")
    for entry in manifest.entries:
        print(f"  {entry.lr} <-> {entry.hr}  ({entry.provenance})")
    print(f"{len(manifest.entries)} aligned video pairs under {OUT / 'pairs'}")


if __name__ == "__main__":
    main()
