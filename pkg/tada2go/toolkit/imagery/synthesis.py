import math

import numpy as np
from scipy import ndimage

from tada2go.toolkit.exceptions.exceptions import InvalidImageException
from tada2go.toolkit.imagery.image import GrayImage, RawPool
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import (CONTENT_HIGH, CONTENT_LOW,
                                             PIXEL_MAX, PIXEL_MIN)

CROP_MODES = ('most-uniform', 'most-textured')


def _smooth_content(rng: np.random.Generator, size: int, smoothness: float) -> np.ndarray:
    # Infinite smoothness is the limit of an infinitely wide low-pass: flat content
    if math.isinf(smoothness):
        return np.full((size, size), 0.5 * (CONTENT_LOW + CONTENT_HIGH))
    white = rng.standard_normal((size, size))
    content = ndimage.gaussian_filter(white, sigma=smoothness, mode='reflect') if smoothness > 0 else white
    low, high = content.min(), content.max()
    if high - low < 1e-12:
        return np.full((size, size), 0.5 * (CONTENT_LOW + CONTENT_HIGH))
    return CONTENT_LOW + (content - low) * ((CONTENT_HIGH - CONTENT_LOW) / (high - low))


def generate_synthetic_raw(count: int, size: int, noise_alpha: float, noise_beta: float,
                           smoothness: float, seed: int) -> RawPool:
    """
    Generates a pool of RAW-like images: smooth random content plus heteroscedastic sensor noise.

    Content is low-pass filtered white noise rescaled to [30, 225]. Noise is Gaussian with variance
    noise_alpha * intensity + noise_beta, the usual Poisson-Gaussian sensor model. Results are clipped
    to [0, 255] and reproducible bit-exactly from the arguments.

    Args:
        count (int): Number of images.
        size (int): Side length in pixels, multiple of 8.
        noise_alpha (float): Signal-dependent (Poisson) noise gain.
        noise_beta (float): Signal-independent (Gaussian) noise variance.
        smoothness (float): Standard deviation of the Gaussian low-pass shaping the content.
            math.inf yields flat content.
        seed (int): Random seed.

    Returns:
        RawPool: The generated pool.

    Raises:
        InvalidImageException: On a non-positive count, a size that is not a positive multiple of 8,
            or negative noise parameters.
    """
    if count < 1:
        raise InvalidImageException(f"Pool size must be at least 1, got {count}.")
    if size < 8 or size % 8 != 0:
        raise InvalidImageException(f"Image size must be a positive multiple of 8, got {size}.")
    if noise_alpha < 0 or noise_beta < 0:
        raise InvalidImageException(
            f"Noise parameters must be non-negative, got alpha={noise_alpha}, beta={noise_beta}.")
    if smoothness < 0:
        raise InvalidImageException(f"Smoothness must be non-negative, got {smoothness}.")

    rng = np.random.default_rng(seed)
    images = []
    for _ in range(count):
        content = _smooth_content(rng, size, smoothness)
        variance = noise_alpha * content + noise_beta
        noise = rng.standard_normal((size, size)) * np.sqrt(variance)
        images.append(GrayImage(np.clip(content + noise, PIXEL_MIN, PIXEL_MAX)))

    provenance = {
        "generator": "poisson-gaussian",
        "count": count,
        "size": size,
        "noise_alpha": noise_alpha,
        "noise_beta": noise_beta,
        "smoothness": smoothness,
    }
    logger.info(f"Generated {count} synthetic RAWs of size {size} (seed {seed}).")
    return RawPool(images, seed=seed, provenance=provenance)


def local_variance(pixels: np.ndarray, window: int = 3) -> np.ndarray:
    """
    Returns the per-pixel variance over a square window (reflected borders).

    Args:
        pixels (np.ndarray): 2D intensity grid.
        window (int, optional): Window side. Defaults to 3.

    Returns:
        np.ndarray: Non-negative variance map of the same shape.
    """
    mean = ndimage.uniform_filter(pixels, size=window, mode='reflect')
    mean_sq = ndimage.uniform_filter(pixels * pixels, size=window, mode='reflect')
    return np.maximum(mean_sq - mean * mean, 0.0)


def crop_by_uniformity(image: GrayImage, crop: int, mode: str = 'most-uniform') -> GrayImage:
    """
    Selects the square crop with the lowest (most-uniform) or highest (most-textured) mean local variance.

    Candidates lie on the 8-pixel grid. Ties go to the smallest (row, col).

    Args:
        image (GrayImage): Image to crop.
        crop (int): Crop side, a multiple of 8 not larger than the image.
        mode (str, optional): 'most-uniform' or 'most-textured'. Defaults to 'most-uniform'.

    Returns:
        GrayImage: The selected crop.

    Raises:
        InvalidImageException: If the crop is larger than the image, not a multiple of 8, or the mode is unknown.
    """
    if mode not in CROP_MODES:
        raise InvalidImageException(f"Unknown crop mode '{mode}', expected one of {CROP_MODES}.")
    if crop < 8 or crop % 8 != 0:
        raise InvalidImageException(f"Crop size must be a positive multiple of 8, got {crop}.")
    if crop > min(image.height, image.width):
        raise InvalidImageException(f"Crop size {crop} exceeds image size {image.height}x{image.width}.")
    if (crop, crop) == image.shape:
        return image

    variance = local_variance(image.pixels)
    # Summed-area table gives every candidate's total in O(1)
    integral = np.zeros((image.height + 1, image.width + 1))
    integral[1:, 1:] = variance.cumsum(axis=0).cumsum(axis=1)

    rows = np.arange(0, image.height - crop + 1, 8)
    cols = np.arange(0, image.width - crop + 1, 8)
    totals = (integral[np.ix_(rows + crop, cols + crop)] - integral[np.ix_(rows, cols + crop)]
              - integral[np.ix_(rows + crop, cols)] + integral[np.ix_(rows, cols)])
    scores = totals / (crop * crop)

    # argmin/argmax return the first occurrence in row-major order, i.e. the smallest (row, col)
    flat = int(np.argmin(scores)) if mode == 'most-uniform' else int(np.argmax(scores))
    row, col = rows[flat // len(cols)], cols[flat % len(cols)]
    return image.crop(int(row), int(col), crop, crop)


def crop_pool(pool: RawPool, crop: int, mode: str = 'most-uniform') -> RawPool:
    """
    Applies crop_by_uniformity to every image of a pool.

    Args:
        pool (RawPool): Pool to crop.
        crop (int): Crop side.
        mode (str, optional): Crop mode. Defaults to 'most-uniform'.

    Returns:
        RawPool: Pool of crops sharing the original seed, with the crop recorded in its provenance.
    """
    provenance = dict(pool.provenance, crop=crop, crop_mode=mode)
    return RawPool([crop_by_uniformity(image, crop, mode) for image in pool], seed=pool.seed, provenance=provenance)
