import numpy as np
from scipy import fft

from tada2go.toolkit.exceptions.exceptions import InvalidBlockGeometryException
from tada2go.toolkit.utils.constants import BLOCK, LEVEL_SHIFT


def dct_block(block) -> np.ndarray:
    """
    Forward JPEG DCT of one 8x8 block: level shift by -128, then orthonormal type-II 2D DCT.

    Args:
        block (array-like): 8x8 intensities.

    Returns:
        np.ndarray: 8x8 DCT coefficients (DC = 8 x mean of the shifted block).

    Raises:
        InvalidBlockGeometryException: If the block is not 8x8.
    """
    array = np.asarray(block, dtype=np.float64)
    if array.shape != (BLOCK, BLOCK):
        raise InvalidBlockGeometryException(f"DCT blocks are 8x8, got shape {array.shape}.")
    return fft.dctn(array - LEVEL_SHIFT, type=2, norm='ortho')


def inverse_dct(coeffs) -> np.ndarray:
    """
    Inverse of dct_block: orthonormal inverse 2D DCT, then level shift by +128.

    Args:
        coeffs (array-like): 8x8 DCT coefficients.

    Returns:
        np.ndarray: 8x8 intensities.
    """
    array = np.asarray(coeffs, dtype=np.float64)
    if array.shape != (BLOCK, BLOCK):
        raise InvalidBlockGeometryException(f"DCT blocks are 8x8, got shape {array.shape}.")
    return fft.idctn(array, type=2, norm='ortho') + LEVEL_SHIFT


def blockify(pixels: np.ndarray) -> np.ndarray:
    """
    Splits (..., H, W) pixels into (..., H/8, W/8, 8, 8) blocks.

    Raises:
        InvalidBlockGeometryException: If H or W is not a positive multiple of 8.
    """
    height, width = pixels.shape[-2], pixels.shape[-1]
    if height < BLOCK or width < BLOCK or height % BLOCK or width % BLOCK:
        raise InvalidBlockGeometryException(f"Image dimensions must be positive multiples of 8, got {height}x{width}.")
    lead = pixels.shape[:-2]
    shaped = pixels.reshape(lead + (height // BLOCK, BLOCK, width // BLOCK, BLOCK))
    return np.moveaxis(shaped, -3, -2)


def unblockify(blocks: np.ndarray) -> np.ndarray:
    """Inverse of blockify: (..., bh, bw, 8, 8) blocks back to (..., 8 bh, 8 bw) pixels."""
    lead = blocks.shape[:-4]
    blocks_h, blocks_w = blocks.shape[-4], blocks.shape[-3]
    return np.moveaxis(blocks, -2, -3).reshape(lead + (blocks_h * BLOCK, blocks_w * BLOCK))


def blockwise_dct(pixels: np.ndarray) -> np.ndarray:
    """Level-shifted orthonormal DCT of every 8x8 block of (..., H, W) pixels."""
    return fft.dctn(blockify(np.asarray(pixels, dtype=np.float64)) - LEVEL_SHIFT, type=2, norm='ortho', axes=(-2, -1))


def blockwise_idct(blocks: np.ndarray) -> np.ndarray:
    """Inverse of blockwise_dct, returning (..., H, W) pixels."""
    return unblockify(fft.idctn(np.asarray(blocks, dtype=np.float64), type=2, norm='ortho', axes=(-2, -1)) + LEVEL_SHIFT)


def dct_basis() -> np.ndarray:
    """
    Returns the 64 orthonormal 8x8 DCT basis patterns.

    Returns:
        np.ndarray: Array of shape (8, 8, 8, 8); entry [k, l] is the pattern of mode (k, l).
    """
    index = np.arange(BLOCK)
    scale = np.where(index == 0, np.sqrt(1.0 / BLOCK), np.sqrt(2.0 / BLOCK))
    # cosines[k, m] = c_k cos(pi (2m + 1) k / 16)
    cosines = scale[:, None] * np.cos(np.pi * (2 * index[None, :] + 1) * index[:, None] / (2 * BLOCK))
    return np.einsum('km,ln->klmn', cosines, cosines)
