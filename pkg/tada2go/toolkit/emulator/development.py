from typing import List, Sequence, Union

import numpy as np

from tada2go.toolkit.exceptions.exceptions import (InvalidKernelException,
                                                   SaturatedDevelopmentException)
from tada2go.toolkit.emulator.kernel import KernelParams
from tada2go.toolkit.imagery.image import GrayImage, RawPool
from tada2go.toolkit.imagery.pipeline import correlate_valid
from tada2go.toolkit.jpegcodec.compression import (dequantize_coeffs,
                                                   quantize_pixels,
                                                   round_half_away, soft_round)
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.utils.constants import (BLOCK, PIXEL_MAX, PIXEL_MIN,
                                             SATURATION_STD)

COMPRESSION_MODES = ('soft', 'hard')


def develop_stack(raws: np.ndarray, kernel: np.ndarray, quant: QuantTable, mode: str = 'soft') -> np.ndarray:
    """
    Emulated development of a (B, H, W) stack: valid convolution, clipping, top-left crop to the 8x8 grid,
    JPEG compression (soft or hard rounding) and unclipped decompression.

    Returns:
        np.ndarray: (B, H', W') decompressed stack, H' and W' multiples of 8.

    Raises:
        InvalidKernelException: If the mode is unknown or the kernel does not fit.
    """
    if mode not in COMPRESSION_MODES:
        raise InvalidKernelException(f"Unknown compression mode '{mode}', expected one of {COMPRESSION_MODES}.")
    size = kernel.shape[0]
    if raws.shape[-2] - size + 1 < BLOCK or raws.shape[-1] - size + 1 < BLOCK:
        raise InvalidKernelException(f"RAW images of size {raws.shape[-2]}x{raws.shape[-1]} are too small "
                                     f"for a {size}x{size} kernel and one JPEG block.")
    developed = np.clip(correlate_valid(raws, kernel), PIXEL_MIN, PIXEL_MAX)
    height = developed.shape[-2] // BLOCK * BLOCK
    width = developed.shape[-1] // BLOCK * BLOCK
    developed = developed[..., :height, :width]
    rounding = soft_round if mode == 'soft' else round_half_away
    return dequantize_coeffs(quantize_pixels(developed, quant, rounding), quant)


def forward_develop(raws: Union[RawPool, Sequence[GrayImage]], kernel: KernelParams, quant: QuantTable,
                    mode: str = 'soft') -> List[GrayImage]:
    """
    Develops a batch of RAW images with a learnable kernel and decompresses them for residual extraction.

    Args:
        raws (RawPool or sequence of GrayImage): Non-empty batch of same-sized RAW images.
        kernel (KernelParams): Kernel to apply.
        quant (QuantTable): Target quantization table.
        mode (str, optional): 'soft' (differentiable surrogate) or 'hard' rounding. Defaults to 'soft'.

    Returns:
        List[GrayImage]: Decompressed, unclipped images on the JPEG grid.
    """
    pool = raws if isinstance(raws, RawPool) else RawPool(list(raws))
    return [GrayImage(pixels) for pixels in develop_stack(pool.stack(), kernel.kernel, quant, mode)]


def check_saturation(stack: np.ndarray) -> None:
    """
    Raises:
        SaturatedDevelopmentException: If the developed batch is near-constant.
    """
    spread = float(np.std(stack))
    if spread < SATURATION_STD:
        raise SaturatedDevelopmentException(
            f"Saturated development: developed batch standard deviation {spread:.3g} below {SATURATION_STD}.")
