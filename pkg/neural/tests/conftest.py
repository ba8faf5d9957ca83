import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image
from scipy import ndimage


def write_pair_fixture(root: Path, n: int = 8, hr_size: int = 128, scale: int = 4, seed: int = 0):
    """Tiny interpolation-class dataset: HR textures plus bicubic LR."""
    rng = np.random.default_rng(seed)
    (root / "hr").mkdir(parents=True, exist_ok=True)
    (root / "lr").mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n):
        base = rng.random((hr_size // 8 + 2, hr_size // 8 + 2, 3))
        hr = np.stack(
            [np.clip(ndimage.zoom(base[:, :, c], 8, order=3), 0, 1) for c in range(3)], axis=-1
        )[:hr_size, :hr_size]
        hr_img = Image.fromarray((hr * 255 + 0.5).astype(np.uint8))
        hr_img.save(root / "hr" / f"t{i}.png")
        hr_img.resize((hr_size // scale, hr_size // scale), Image.BICUBIC).save(
            root / "lr" / f"t{i}.png"
        )
        entries.append(
            {
                "hr": f"hr/t{i}.png",
                "lr": f"lr/t{i}.png",
                "class": "interpolation",
                "scale": scale,
                "level": None,
                "provenance": f"fixture seed={seed}",
            }
        )
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps({"version": "1", "entries": entries}, indent=2) + "\n")
    return manifest


@pytest.fixture(scope="session")
def pair_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("pairs")
    return write_pair_fixture(root)
