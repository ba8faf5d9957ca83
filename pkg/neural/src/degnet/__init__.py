"""degnet: learned degradation synthesizers for SR pair datasets.

Trains a smooth x4 upsampler (pixel MSE) and an adversarial texture
generator (three degradation levels selecting different loss subsets),
then emits degraded/HR pairs in the dataset toolkit's manifest format.
"""

from .losses import LossWeights, level_losses
from .models import Generator, TextureNetConfig, UpNetConfig, upnet_forward

__version__ = "0.1.0"

__all__ = [
    "Generator",
    "UpNetConfig",
    "TextureNetConfig",
    "LossWeights",
    "level_losses",
    "upnet_forward",
    "__version__",
]
