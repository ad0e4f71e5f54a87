from typing import Callable

import numpy as np

from tada2go.toolkit.exceptions.exceptions import InvalidBlockGeometryException
from tada2go.toolkit.imagery.image import GrayImage
from tada2go.toolkit.jpegcodec.dct import blockwise_dct, blockwise_idct
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.utils.constants import BLOCK, PIXEL_MAX, PIXEL_MIN


class JpegCoeffs:
    """Quantized block-DCT representation of a grayscale JPEG image."""

    def __init__(self, coeffs, quant: QuantTable) -> None:
        """
        Initializes JpegCoeffs.

        Args:
            coeffs (array-like): Array of shape (blocks_h, blocks_w, 8, 8). Integral after hard
                compression, real-valued after soft compression.
            quant (QuantTable): The table the coefficients are quantized with.

        Raises:
            InvalidBlockGeometryException: If the array does not hold 8x8 blocks.
        """
        array = np.asarray(coeffs)
        if array.ndim != 4 or array.shape[2:] != (BLOCK, BLOCK) or array.shape[0] < 1 or array.shape[1] < 1:
            raise InvalidBlockGeometryException(f"Coefficients must have shape (bh, bw, 8, 8), got {array.shape}.")
        if np.issubdtype(array.dtype, np.integer):
            array = array.astype(np.int32)
        else:
            array = array.astype(np.float64)
        self._coeffs = array
        self._coeffs.setflags(write=False)
        self.quant = quant

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def blocks_h(self) -> int:
        return self._coeffs.shape[0]

    @property
    def blocks_w(self) -> int:
        return self._coeffs.shape[1]

    @property
    def height(self) -> int:
        return self.blocks_h * BLOCK

    @property
    def width(self) -> int:
        return self.blocks_w * BLOCK

    @property
    def is_integral(self) -> bool:
        return np.issubdtype(self._coeffs.dtype, np.integer)

    def with_coeffs(self, coeffs) -> 'JpegCoeffs':
        """Returns coefficients of the same geometry and table with new values."""
        return JpegCoeffs(coeffs, self.quant)

    def __eq__(self, other) -> bool:
        if not isinstance(other, JpegCoeffs):
            return NotImplemented
        return self.quant == other.quant and np.array_equal(self._coeffs, other._coeffs)

    def __repr__(self) -> str:
        kind = 'hard' if self.is_integral else 'soft'
        return f"JpegCoeffs({self.blocks_h}x{self.blocks_w} blocks, {kind}, {self.quant.identifier})"


def round_half_away(values: np.ndarray) -> np.ndarray:
    """Rounds to the nearest integer, halves away from zero."""
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def soft_round(values: np.ndarray) -> np.ndarray:
    """
    Differentiable rounding surrogate r(x) = round(x) + (x - round(x))^3.

    Exact on integers, never more than 0.125 away from hard rounding.
    """
    rounded = round_half_away(values)
    return rounded + (values - rounded) ** 3


def quantize_pixels(pixels: np.ndarray, quant: QuantTable, rounding: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    Block DCT, division by the quantization steps, and rounding for (..., H, W) pixels.

    Returns:
        np.ndarray: Coefficients of shape (..., H/8, W/8, 8, 8).
    """
    return rounding(blockwise_dct(pixels) / quant.steps)


def dequantize_coeffs(coeffs: np.ndarray, quant: QuantTable) -> np.ndarray:
    """Multiplication by the steps and inverse block DCT for (..., bh, bw, 8, 8) coefficients."""
    return blockwise_idct(np.asarray(coeffs, dtype=np.float64) * quant.steps)


def _checked_pixels(image: GrayImage) -> np.ndarray:
    if image.height % BLOCK or image.width % BLOCK:
        raise InvalidBlockGeometryException(
            f"Image dimensions must be multiples of 8, got {image.height}x{image.width}.")
    return image.pixels


def compress_hard(image: GrayImage, quant: QuantTable) -> JpegCoeffs:
    """
    JPEG-compresses an image: block DCT, division by the steps, rounding half away from zero.

    Args:
        image (GrayImage): Image with dimensions multiple of 8.
        quant (QuantTable): Quantization table.

    Returns:
        JpegCoeffs: Integral coefficients.

    Raises:
        InvalidBlockGeometryException: If a dimension is not a multiple of 8.
    """
    coeffs = quantize_pixels(_checked_pixels(image), quant, round_half_away)
    return JpegCoeffs(coeffs.astype(np.int32), quant)


def compress_soft(image: GrayImage, quant: QuantTable) -> JpegCoeffs:
    """
    Differentiable JPEG compression: as compress_hard with rounding replaced by soft_round.

    Args:
        image (GrayImage): Image with dimensions multiple of 8.
        quant (QuantTable): Quantization table.

    Returns:
        JpegCoeffs: Real-valued coefficients within 0.125 of the hard ones.

    Raises:
        InvalidBlockGeometryException: If a dimension is not a multiple of 8.
    """
    return JpegCoeffs(quantize_pixels(_checked_pixels(image), quant, soft_round), quant)


def decompress(coeffs: JpegCoeffs) -> GrayImage:
    """
    Dequantizes, applies the inverse DCT and the +128 level shift. No clipping.

    Args:
        coeffs (JpegCoeffs): Coefficients to decompress.

    Returns:
        GrayImage: Unclipped real-valued image.
    """
    return GrayImage(dequantize_coeffs(coeffs.coeffs, coeffs.quant))


def decompress_8bit(coeffs: JpegCoeffs) -> GrayImage:
    """
    Decompresses, rounds and clips to the 8-bit range, as a JPEG viewer would for file output.

    Args:
        coeffs (JpegCoeffs): Coefficients to decompress.

    Returns:
        GrayImage: Image with integral values in [0, 255].
    """
    return GrayImage(np.clip(np.round(dequantize_coeffs(coeffs.coeffs, coeffs.quant)), PIXEL_MIN, PIXEL_MAX))


def count_nzac(coeffs: JpegCoeffs) -> int:
    """
    Counts non-zero AC coefficients (every block's DC excluded).

    Args:
        coeffs (JpegCoeffs): Hard-quantized coefficients.

    Returns:
        int: Number of non-zero AC coefficients.
    """
    nonzero = coeffs.coeffs != 0
    return int(nonzero.sum() - nonzero[..., 0, 0].sum())
