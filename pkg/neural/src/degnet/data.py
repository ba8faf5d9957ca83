"""Image pairs from a manifest: PNG decoding, patch sampling, augmentation."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .manifest import Manifest


def load_image(path: str | Path) -> torch.Tensor:
    """PNG -> float tensor (3, h, w) in [0, 1]."""
    with Image.open(path) as im:
        if im.mode != "RGB":
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1).contiguous()


def save_image(tensor: torch.Tensor, path: str | Path) -> None:
    """(3, h, w) tensor in [0, 1] -> 8-bit PNG."""
    arr = tensor.clamp(0.0, 1.0).permute(1, 2, 0).numpy()
    q = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(q, mode="RGB").save(path, format="PNG")


class PairDataset:
    """LR/HR pairs resolved relative to the manifest file."""

    def __init__(self, manifest_path: str | Path):
        manifest_path = Path(manifest_path)
        self.base = manifest_path.parent
        self.manifest = Manifest.read(manifest_path)
        if not self.manifest.entries:
            raise ValueError(f"manifest {manifest_path} has no entries")

    def __len__(self) -> int:
        return len(self.manifest.entries)

    def load_pair(self, idx: int) -> tuple[torch.Tensor, torch.Tensor]:
        e = self.manifest.entries[idx]
        return load_image(self.base / e.lr), load_image(self.base / e.hr)


def _augment(lr: torch.Tensor, hr: torch.Tensor, rng: np.random.Generator):
    """Random 90/180/270 rotation and horizontal flip, same for both."""
    k = int(rng.integers(0, 4))
    if k:
        lr = torch.rot90(lr, k, dims=(1, 2))
        hr = torch.rot90(hr, k, dims=(1, 2))
    if rng.integers(0, 2):
        lr = torch.flip(lr, dims=(2,))
        hr = torch.flip(hr, dims=(2,))
    return lr, hr


class PatchSampler:
    """Seeded random aligned patch batches with rotation/flip augmentation."""

    def __init__(
        self,
        dataset: PairDataset,
        lr_patch: int,
        scale: int,
        batch_size: int,
        seed: int = 0,
        augment: bool = True,
    ):
        self.pairs = [dataset.load_pair(i) for i in range(len(dataset))]
        self.lr_patch = lr_patch
        self.scale = scale
        self.batch_size = batch_size
        self.augment = augment
        self.rng = np.random.default_rng(seed)

    def next_batch(self) -> tuple[torch.Tensor, torch.Tensor]:
        lrs, hrs = [], []
        for _ in range(self.batch_size):
            lr, hr = self.pairs[int(self.rng.integers(0, len(self.pairs)))]
            max_x = lr.shape[2] - self.lr_patch
            max_y = lr.shape[1] - self.lr_patch
            x = int(self.rng.integers(0, max_x + 1)) if max_x > 0 else 0
            y = int(self.rng.integers(0, max_y + 1)) if max_y > 0 else 0
            lr_p = lr[:, y : y + self.lr_patch, x : x + self.lr_patch]
            s = self.scale
            hr_p = hr[:, y * s : (y + self.lr_patch) * s, x * s : (x + self.lr_patch) * s]
            if self.augment:
                lr_p, hr_p = _augment(lr_p, hr_p, self.rng)
            lrs.append(lr_p)
            hrs.append(hr_p)
        return torch.stack(lrs), torch.stack(hrs)
