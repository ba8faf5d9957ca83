"""Exception types shared across the toolkit."""


class SrpairError(Exception):
    """Base class for all toolkit errors."""


class ColorspaceError(SrpairError):
    """Operation received an image in the wrong colorspace."""


class ImageSizeError(SrpairError):
    """Image dimensions violate an operation's preconditions."""


class SingularTransformError(SrpairError):
    """Affine transform is not invertible."""


class InsufficientMatchesError(SrpairError):
    """Too few correspondences to estimate a model."""


class DegenerateGeometryError(SrpairError):
    """All candidate minimal samples were collinear."""


class EmptyMaskError(SrpairError):
    """Validity mask contains no usable pixels."""


class ManifestError(SrpairError):
    """Pair manifest is malformed or references missing files."""


class AlignmentError(SrpairError):
    """Registration pipeline failed; ``stage`` names the failing step.

    Stages: ``features``, ``matching``, ``ransac``.
    """

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"alignment failed at stage '{stage}': {message}")
