#!/usr/bin/env python3
"""Evaluation demo: Y-channel PSNR/SSIM over a pair manifest.

Builds a small interpolation-class dataset, runs the simplest SR baseline
(bicubic upsampling) over its LR images, and scores the results against
the HR ground truth exactly the way a trained model's outputs would be.
"""

from pathlib import Path

import numpy as np
from scipy import ndimage

from srpair.degrade import DegradationSpec, build_interpolation_pairs
from srpair.image import ImageBuffer, read_png, write_png
from srpair.metrics import evaluate_manifest
from srpair.resample import resize_to

OUT = Path(__file__).parent / "output" / "evaluation"


def main():
    hr_dir = OUT / "hr_source"
    hr_dir.mkdir(parents=True, exist_ok=True)
    rng_root = 400
    for i in range(5):
        rng = np.random.default_rng(rng_root + i)
        chans = []
        for _ in range(3):
            base = rng.random((26, 26))
            chans.append(np.clip(ndimage.zoom(base, 8, order=3), 0, 1)[:192, :192])
        write_png(ImageBuffer(np.stack(chans, axis=-1)), hr_dir / f"img{i}.png")

    manifest = build_interpolation_pairs(hr_dir, DegradationSpec(scale=2), OUT / "pairs")
    manifest.write(OUT / "pairs" / "manifest.json")

    # "SR model": bicubic upsampling. Outputs are name-matched on the HR
    # basename, which is what `srpair evaluate --sr` expects.
    sr_dir = OUT / "sr_bicubic"
    sr_dir.mkdir(exist_ok=True)
    for entry in manifest.entries:
        hr = read_png(OUT / "pairs" / entry.hr)
        lr = read_png(OUT / "pairs" / entry.lr)
        write_png(resize_to(lr, hr.width, hr.height, antialias=False),
                  sr_dir / Path(entry.hr).name)

    report = evaluate_manifest(manifest, sr_dir, OUT / "pairs")
    report.write_csv(OUT / "report.csv")
    report.write_aggregates_json(OUT / "report.aggregates.json")
    for row in report.rows:
        print(f"  {row.id}: {row.psnr_db:.2f} dB  ssim {row.ssim:.4f}")
    agg = report.aggregates()[0]
    print(f"bicubic x{agg['scale']} baseline: mean {agg['mean_psnr_db']:.2f} dB, "
          f"mean ssim {agg['mean_ssim']:.4f}  (n={agg['count']})")
    print(f"report in {OUT / 'report.csv'}")


if __name__ == "__main__":
    main()
