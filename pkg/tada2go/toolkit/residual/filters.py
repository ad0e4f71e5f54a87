from typing import Dict, NamedTuple, Union

import numpy as np

from tada2go.toolkit.exceptions.exceptions import (InvalidPatchGeometryException,
                                                   InvalidPipelineException)
from tada2go.toolkit.imagery.image import GrayImage
from tada2go.toolkit.imagery.pipeline import correlate_valid
from tada2go.toolkit.utils.constants import KB_KERNEL, L4_KERNEL


class ResidualFilter(NamedTuple):
    """
    Named tuple for a zero-sum high-pass filter.

    Attributes:
        identifier (str): 'KB' or 'L4'.
        kernel (np.ndarray): Odd square kernel whose coefficients sum to 0.
    """
    identifier: str
    kernel: np.ndarray

    @property
    def margin(self) -> int:
        return self.kernel.shape[0] // 2


KB_FILTER = ResidualFilter('KB', KB_KERNEL)
L4_FILTER = ResidualFilter('L4', L4_KERNEL)
RESIDUAL_FILTERS: Dict[str, ResidualFilter] = {KB_FILTER.identifier: KB_FILTER, L4_FILTER.identifier: L4_FILTER}


def get_filter(identifier: str) -> ResidualFilter:
    """
    Looks up a residual filter by identifier.

    Raises:
        InvalidPipelineException: If the identifier is unknown.
    """
    if identifier not in RESIDUAL_FILTERS:
        raise InvalidPipelineException(f"Unknown residual filter '{identifier}', expected one of {sorted(RESIDUAL_FILTERS)}.")
    return RESIDUAL_FILTERS[identifier]


def apply_filter_array(pixels: np.ndarray, residual_filter: ResidualFilter) -> np.ndarray:
    """
    Valid-region filtering of an image or a stack of images of shape (..., H, W).

    Raises:
        InvalidPatchGeometryException: If the images are smaller than the kernel.
    """
    size = residual_filter.kernel.shape[0]
    if pixels.shape[-2] < size or pixels.shape[-1] < size:
        raise InvalidPatchGeometryException(
            f"Image of size {pixels.shape[-2]}x{pixels.shape[-1]} is smaller than the {residual_filter.identifier} kernel.")
    return correlate_valid(np.asarray(pixels, dtype=np.float64), residual_filter.kernel)


def apply_filter(image: Union[GrayImage, np.ndarray], residual_filter: ResidualFilter) -> GrayImage:
    """
    Computes the high-pass residual of an image on its valid region (no padding).

    Args:
        image (GrayImage): Input image, larger than the kernel.
        residual_filter (ResidualFilter): Filter to apply.

    Returns:
        GrayImage: Residual, shrunk by the filter margin on every side.

    Raises:
        InvalidPatchGeometryException: If the image is smaller than the kernel.
    """
    pixels = image.pixels if isinstance(image, GrayImage) else np.asarray(image, dtype=np.float64)
    return GrayImage(apply_filter_array(pixels, residual_filter))
