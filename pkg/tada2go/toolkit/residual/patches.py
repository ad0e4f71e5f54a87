from typing import Dict, Iterable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from tada2go.toolkit.exceptions.exceptions import (EmptySelectionException,
                                                   InsufficientSamplesException,
                                                   InvalidPatchGeometryException)
from tada2go.toolkit.imagery.image import GrayImage
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.residual.filters import (ResidualFilter,
                                              apply_filter_array, get_filter)
from tada2go.toolkit.utils.constants import (BLOCK, DEFAULT_Q_HIGH,
                                             DEFAULT_Q_LOW)


class ResidualPatchSet:
    """Flattened residual patches of one filter, with the mask of the variance selection."""

    def __init__(self, patches, patch_h: int, patch_w: int, filter_id: str, selected=None) -> None:
        """
        Initializes a ResidualPatchSet.

        Args:
            patches (array-like): N x D matrix, D = patch_h * patch_w, each row a patch flattened row-major.
            patch_h (int): Patch height in pixels.
            patch_w (int): Patch width in pixels.
            filter_id (str): Identifier of the residual filter.
            selected (array-like, optional): Boolean mask of length N. Defaults to all selected.

        Raises:
            InvalidPatchGeometryException: If the shapes are inconsistent or the set is empty.
        """
        array = np.asarray(patches, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] != patch_h * patch_w:
            raise InvalidPatchGeometryException(
                f"Patch matrix of shape {array.shape} does not hold {patch_h}x{patch_w} patches.")
        mask = np.ones(array.shape[0], dtype=bool) if selected is None else np.asarray(selected, dtype=bool)
        if mask.shape != (array.shape[0],):
            raise InvalidPatchGeometryException(f"Selection mask of length {mask.shape} for {array.shape[0]} patches.")
        self.patches = array
        self.patch_h = patch_h
        self.patch_w = patch_w
        self.filter_id = filter_id
        self.selected = mask

    @property
    def count(self) -> int:
        return self.patches.shape[0]

    @property
    def dim(self) -> int:
        return self.patches.shape[1]

    @property
    def selected_count(self) -> int:
        return int(self.selected.sum())

    def selected_patches(self) -> np.ndarray:
        """Returns the rows kept by the selection."""
        return self.patches[self.selected]

    def with_selection(self, selected) -> 'ResidualPatchSet':
        return ResidualPatchSet(self.patches, self.patch_h, self.patch_w, self.filter_id, selected)

    @classmethod
    def concatenate(cls, sets: Sequence['ResidualPatchSet']) -> 'ResidualPatchSet':
        """
        Stacks patch sets of one filter and geometry.

        Raises:
            InvalidPatchGeometryException: If the sets disagree on filter or geometry.
        """
        first = sets[0]
        for other in sets[1:]:
            if (other.patch_h, other.patch_w, other.filter_id) != (first.patch_h, first.patch_w, first.filter_id):
                raise InvalidPatchGeometryException("Cannot concatenate patch sets of different filters or geometries.")
        return cls(np.concatenate([s.patches for s in sets]), first.patch_h, first.patch_w, first.filter_id,
                   np.concatenate([s.selected for s in sets]))

    def to_frame(self) -> pd.DataFrame:
        """
        Converts the set to a DataFrame, one row per patch, columns p0..p{D-1} and 'selected'.
        """
        frame = pd.DataFrame(self.patches, columns=[f"p{i}" for i in range(self.dim)])
        frame.insert(0, 'selected', self.selected)
        frame.insert(0, 'filter', self.filter_id)
        return frame

    def write_csv(self, path: str) -> str:
        self.to_frame().to_csv(path, index=False)
        return path

    def __repr__(self) -> str:
        return (f"ResidualPatchSet({self.filter_id}, {self.count} patches of {self.patch_h}x{self.patch_w}, "
                f"{self.selected_count} selected)")


def patch_grid_start(origin_offset: int, margin: int) -> int:
    """Residual coordinate of the first patch whose original-frame position is congruent to origin_offset mod 8."""
    return (origin_offset - margin) % BLOCK


def extract_patch_array(residuals: np.ndarray, patch_h: int, patch_w: int,
                        origin_offset: int = 0, margin: int = 0) -> np.ndarray:
    """
    Cuts non-overlapping patches from a residual or a stack of residuals of shape (..., H, W).

    Returns:
        np.ndarray: N x (patch_h * patch_w) matrix; images in order, patches row-major within an image.

    Raises:
        InvalidPatchGeometryException: If the patch dimensions are not multiples of 8 or no patch fits.
    """
    if patch_h < BLOCK or patch_w < BLOCK or patch_h % BLOCK or patch_w % BLOCK:
        raise InvalidPatchGeometryException(f"Patch dimensions must be multiples of 8, got {patch_h}x{patch_w}.")
    start = patch_grid_start(origin_offset, margin)
    height, width = residuals.shape[-2] - start, residuals.shape[-1] - start
    rows, cols = height // patch_h, width // patch_w
    if rows < 1 or cols < 1:
        raise InvalidPatchGeometryException(
            f"No complete {patch_h}x{patch_w} patch fits in a {residuals.shape[-2]}x{residuals.shape[-1]} residual.")
    lead = residuals.shape[:-2]
    region = residuals[..., start:start + rows * patch_h, start:start + cols * patch_w]
    tiles = region.reshape(lead + (rows, patch_h, cols, patch_w))
    tiles = np.moveaxis(tiles, -3, -2)
    return tiles.reshape(-1, patch_h * patch_w)


def extract_patches(residual: Union[GrayImage, np.ndarray], patch_h: int, patch_w: int, origin_offset: int = 0,
                    margin: int = 0, filter_id: str = '') -> ResidualPatchSet:
    """
    Tiles a residual into non-overlapping patches aligned on the JPEG grid of the pre-filter image.

    Args:
        residual (GrayImage or np.ndarray): Residual, or a stack of residuals.
        patch_h (int): Patch height, a multiple of 8.
        patch_w (int): Patch width, a multiple of 8.
        origin_offset (int, optional): Grid phase of patch corners in the original frame. Defaults to 0.
        margin (int, optional): Pixels the filter removed on each side; compensated so alignment refers
            to the original image. Defaults to 0.
        filter_id (str, optional): Filter identifier recorded on the set.

    Returns:
        ResidualPatchSet: All patches, all selected.

    Raises:
        InvalidPatchGeometryException: If the patch dimensions are not multiples of 8 or no patch fits.
    """
    pixels = residual.pixels if isinstance(residual, GrayImage) else np.asarray(residual, dtype=np.float64)
    return ResidualPatchSet(extract_patch_array(pixels, patch_h, patch_w, origin_offset, margin),
                            patch_h, patch_w, filter_id)


def variance_selection_mask(patches: np.ndarray, q_low: float, q_high: float) -> np.ndarray:
    """
    Boolean mask of the patches whose sample variance lies within the [q_low, q_high] quantile bounds (inclusive).

    Raises:
        EmptySelectionException: If the bounds are invalid or nothing is selected.
        InsufficientSamplesException: If fewer than two patches are given.
    """
    if not 0.0 <= q_low < q_high <= 1.0:
        raise EmptySelectionException(f"Quantile bounds must satisfy 0 <= q_low < q_high <= 1, got ({q_low}, {q_high}).")
    if patches.shape[0] < 2:
        raise InsufficientSamplesException(f"Variance selection needs at least 2 patches, got {patches.shape[0]}.")
    variances = patches.var(axis=1, ddof=1)
    low, high = np.quantile(variances, [q_low, q_high])
    mask = (variances >= low) & (variances <= high)
    if not mask.any():
        raise EmptySelectionException(f"No patch variance within [{low:.6g}, {high:.6g}].")
    return mask


def select_by_variance(patch_set: ResidualPatchSet, q_low: float = DEFAULT_Q_LOW,
                       q_high: float = DEFAULT_Q_HIGH) -> ResidualPatchSet:
    """
    Keeps the patches whose variance falls between two quantiles of the set's own variances.

    Quantiles are computed over every patch of the set, so the selection is idempotent. q_low=0, q_high=1
    disables selection.

    Args:
        patch_set (ResidualPatchSet): Patches to select from, N >= 2.
        q_low (float, optional): Lower quantile. Defaults to 0.3.
        q_high (float, optional): Upper quantile. Defaults to 0.6.

    Returns:
        ResidualPatchSet: The same patches with the new selection mask.

    Raises:
        EmptySelectionException: If nothing is selected.
        InsufficientSamplesException: If the set holds fewer than two patches.
    """
    return patch_set.with_selection(variance_selection_mask(patch_set.patches, q_low, q_high))


class PatchConfig(NamedTuple):
    """
    Named tuple for the residual patch extraction settings shared by source and target.

    Attributes:
        patch_h (int): Patch height, multiple of 8.
        patch_w (int): Patch width, multiple of 8.
        filters (tuple): Residual filter identifiers; each yields its own patch set.
        q_low (float): Lower variance quantile.
        q_high (float): Upper variance quantile.
        select (bool): Apply the variance selection.
        origin_offset (int): Patch grid phase in the original frame.
    """
    patch_h: int = 8
    patch_w: int = 16
    filters: Tuple[str, ...] = ('KB', 'L4')
    q_low: float = DEFAULT_Q_LOW
    q_high: float = DEFAULT_Q_HIGH
    select: bool = True
    origin_offset: int = 0


def build_patch_sets(images: Union[np.ndarray, Sequence[np.ndarray]], config: PatchConfig = PatchConfig(),
                     filters: Optional[Iterable[Union[str, ResidualFilter]]] = None) -> Dict[str, ResidualPatchSet]:
    """
    Filters (decompressed) images and pools their patches per filter.

    Args:
        images (np.ndarray or sequence): A (B, H, W) stack, or 2D arrays of possibly different sizes.
        config (PatchConfig, optional): Patch geometry and selection settings.
        filters (Iterable, optional): Filters or identifiers overriding config.filters.

    Returns:
        Dict[str, ResidualPatchSet]: One set per filter identifier; the selection is computed over
            the pooled patches of all images.
    """
    if isinstance(images, np.ndarray) and images.ndim == 2:
        images = images[None]
    sets: Dict[str, ResidualPatchSet] = {}
    for item in (config.filters if filters is None else filters):
        residual_filter = get_filter(item) if isinstance(item, str) else item
        if isinstance(images, np.ndarray):
            chunks = [apply_filter_array(images.astype(np.float64), residual_filter)]
        else:
            chunks = [apply_filter_array(np.asarray(image, dtype=np.float64), residual_filter) for image in images]
        patches = np.concatenate([extract_patch_array(chunk, config.patch_h, config.patch_w, config.origin_offset,
                                                      residual_filter.margin) for chunk in chunks])
        patch_set = ResidualPatchSet(patches, config.patch_h, config.patch_w, residual_filter.identifier)
        if config.select:
            patch_set = select_by_variance(patch_set, config.q_low, config.q_high)
        sets[residual_filter.identifier] = patch_set
    return sets


def log_patch_sets(sets: Dict[str, ResidualPatchSet], label: Optional[str] = None) -> None:
    for patch_set in sets.values():
        logger.info(f"{label or 'patches'}: {patch_set!r}")
