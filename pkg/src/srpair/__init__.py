"""srpair: build and evaluate real-world super-resolution image pairs.

Submodules:

- ``image``     buffers, color conversion, lossless transforms, PNG I/O
- ``filters``   blur kernels, convolution, seeded noise
- ``resample``  bicubic resizing and affine warping
- ``sift``      scale-space keypoint detection and descriptors
- ``matching``  descriptor matching and geometric match filters
- ``register``  RANSAC alignment pipeline for raw LR/HR pairs
- ``degrade``   degradation synthesis, augmentation, video pairing
- ``metrics``   Y-channel PSNR/SSIM and batch evaluation
- ``manifest``  the JSON pair-manifest interchange format
- ``cli``       the ``srpair`` command-line tool
"""

from .image import Colorspace, ImageBuffer, read_png, write_png
from .manifest import PairEntry, PairManifest

__version__ = "0.1.0"

__all__ = [
    "Colorspace",
    "ImageBuffer",
    "PairEntry",
    "PairManifest",
    "read_png",
    "write_png",
    "__version__",
]
