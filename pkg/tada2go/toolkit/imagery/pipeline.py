import json
import math
from typing import Dict, List, NamedTuple, Optional

import numpy as np
from scipy import signal

from tada2go.toolkit.exceptions.exceptions import InvalidPipelineException
from tada2go.toolkit.imagery.image import GrayImage
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import PIXEL_MAX, PIXEL_MIN, SHARPEN_S

OP_KINDS = ('convolve', 'unsharp-mask', 'blur')


class PipelineOp(NamedTuple):
    """
    Named tuple for one development operation.

    Attributes:
        kind (str): One of 'convolve', 'unsharp-mask', 'blur'.
        params (dict): 'kernel' for convolve; 'radius', 'amount', 'threshold' for unsharp-mask; 'radius' for blur.
    """
    kind: str
    params: dict


def convolve(kernel) -> PipelineOp:
    return PipelineOp('convolve', {'kernel': np.asarray(kernel, dtype=np.float64)})


def unsharp_mask(radius: float, amount: float, threshold: float = 0.0) -> PipelineOp:
    return PipelineOp('unsharp-mask', {'radius': float(radius), 'amount': float(amount), 'threshold': float(threshold)})


def blur(radius: float) -> PipelineOp:
    return PipelineOp('blur', {'radius': float(radius)})


def gaussian_kernel(radius: float) -> np.ndarray:
    """
    Returns a normalized square Gaussian kernel truncated at three standard deviations.

    Args:
        radius (float): Standard deviation in pixels. 0 yields the 1x1 identity.

    Returns:
        np.ndarray: Odd-sized kernel summing to 1.
    """
    if radius <= 0:
        return np.ones((1, 1))
    half = max(1, int(math.ceil(3.0 * radius)))
    axis = np.arange(-half, half + 1, dtype=np.float64)
    profile = np.exp(-0.5 * (axis / radius) ** 2)
    kernel = np.outer(profile, profile)
    return kernel / kernel.sum()


def correlate_valid(pixels: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """
    Valid-region cross-correlation of an image, or a stack of images, with a 2D kernel.

    No padding is used: each spatial dimension shrinks by kernel size - 1.

    Args:
        pixels (np.ndarray): Array of shape (..., H, W).
        kernel (np.ndarray): 2D kernel.

    Returns:
        np.ndarray: Array of shape (..., H - kh + 1, W - kw + 1).
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    shaped = kernel.reshape((1,) * (pixels.ndim - 2) + kernel.shape)
    return signal.correlate(pixels, shaped, mode='valid')


class PipelineConfig:
    """A concrete development pipeline: an ordered list of operations and the JPEG quantization table applied after them."""

    def __init__(self, identifier: str, ops: List[PipelineOp], quant_table: QuantTable) -> None:
        """
        Initializes a PipelineConfig.

        Args:
            identifier (str): Pipeline name.
            ops (List[PipelineOp]): Operations applied in order.
            quant_table (QuantTable): Table used when the developed image is JPEG-compressed.

        Raises:
            InvalidPipelineException: If an operation is unknown or malformed.
        """
        self.identifier = identifier
        self.ops = [self._validated(op) for op in ops]
        self.quant_table = quant_table

    @staticmethod
    def _validated(op: PipelineOp) -> PipelineOp:
        if op.kind not in OP_KINDS:
            raise InvalidPipelineException(f"Unknown operation '{op.kind}', expected one of {OP_KINDS}.")
        if op.kind == 'convolve':
            kernel = np.asarray(op.params.get('kernel'), dtype=np.float64)
            if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1] or kernel.shape[0] % 2 == 0:
                raise InvalidPipelineException(f"Convolution kernels must be odd-sized and square, got shape {kernel.shape}.")
            return PipelineOp('convolve', {'kernel': kernel})
        radius = float(op.params.get('radius', -1))
        if radius < 0:
            raise InvalidPipelineException(f"Operation '{op.kind}' needs a non-negative radius.")
        if op.kind == 'unsharp-mask':
            return unsharp_mask(radius, op.params.get('amount', 1.0), op.params.get('threshold', 0.0))
        return blur(radius)

    @property
    def margin(self) -> int:
        """Total number of pixels lost on each side by valid-region development."""
        total = 0
        for op in self.ops:
            if op.kind == 'convolve':
                total += op.params['kernel'].shape[0] // 2
            else:
                total += gaussian_kernel(op.params['radius']).shape[0] // 2
        return total

    def to_dict(self) -> dict:
        """
        Converts the pipeline to the catalog's key-value schema.

        Returns:
            dict: A JSON-serializable dictionary.
        """
        ops = []
        for op in self.ops:
            entry = {'kind': op.kind}
            for key, value in op.params.items():
                entry[key] = value.tolist() if isinstance(value, np.ndarray) else value
            ops.append(entry)
        return {'identifier': self.identifier, 'quant_table': self.quant_table.to_config(), 'ops': ops}

    @classmethod
    def from_dict(cls, entry: dict) -> 'PipelineConfig':
        """
        Builds a pipeline from a catalog entry.

        Args:
            entry (dict): Entry with 'identifier', 'quant_table' and 'ops'.

        Raises:
            InvalidPipelineException: If the entry is malformed.
        """
        try:
            ops = [PipelineOp(op['kind'], {k: v for k, v in op.items() if k != 'kind'}) for op in entry.get('ops', [])]
            return cls(entry['identifier'], ops, QuantTable.from_config(entry.get('quant_table', 'qf100')))
        except InvalidPipelineException:
            raise
        except Exception as err:
            msg = f"Malformed pipeline entry: {err}"
            logger.exception(msg)
            raise InvalidPipelineException(msg)

    def with_quant_table(self, quant_table: QuantTable) -> 'PipelineConfig':
        return PipelineConfig(self.identifier, self.ops, quant_table)

    def __repr__(self) -> str:
        return f"PipelineConfig('{self.identifier}', {[op.kind for op in self.ops]}, {self.quant_table.identifier})"


def _apply_op(pixels: np.ndarray, op: PipelineOp) -> np.ndarray:
    if op.kind == 'convolve':
        return correlate_valid(pixels, op.params['kernel'])

    kernel = gaussian_kernel(op.params['radius'])
    blurred = correlate_valid(pixels, kernel)
    if op.kind == 'blur':
        return blurred

    half = kernel.shape[0] // 2
    center = pixels[..., half:pixels.shape[-2] - half, half:pixels.shape[-1] - half]
    detail = center - blurred
    threshold = op.params['threshold']
    if threshold > 0:
        detail = np.where(np.abs(detail) >= threshold, detail, 0.0)
    return center + op.params['amount'] * detail


def develop_array(pixels: np.ndarray, pipeline: PipelineConfig, clip: bool = True) -> np.ndarray:
    """
    Applies a pipeline's operations to an image or a stack of images.

    Args:
        pixels (np.ndarray): Array of shape (..., H, W).
        pipeline (PipelineConfig): Pipeline to apply.
        clip (bool, optional): Clip to [0, 255] after each operation. Defaults to True.

    Returns:
        np.ndarray: Developed array, shrunk by the pipeline margin on every side.

    Raises:
        InvalidPipelineException: If a kernel is larger than the (intermediate) image.
    """
    developed = np.asarray(pixels, dtype=np.float64)
    for op in pipeline.ops:
        size = op.params['kernel'].shape[0] if op.kind == 'convolve' else gaussian_kernel(op.params['radius']).shape[0]
        if size > developed.shape[-2] or size > developed.shape[-1]:
            raise InvalidPipelineException(
                f"Kernel of size {size} exceeds image of size {developed.shape[-2]}x{developed.shape[-1]} "
                f"in pipeline '{pipeline.identifier}'.")
        developed = _apply_op(developed, op)
        if clip:
            developed = np.clip(developed, PIXEL_MIN, PIXEL_MAX)
    return developed


def develop(image: GrayImage, pipeline: PipelineConfig, clip: bool = True) -> GrayImage:
    """
    Develops one image: applies the pipeline operations in order on the valid region, without JPEG compression.

    Args:
        image (GrayImage): RAW-like input.
        pipeline (PipelineConfig): Pipeline to apply.
        clip (bool, optional): Clip to [0, 255] after each operation. Defaults to True.

    Returns:
        GrayImage: Developed image, shrunk by the pipeline margin.

    Raises:
        InvalidPipelineException: If a kernel is larger than the image.
    """
    return GrayImage(develop_array(image.pixels, pipeline, clip=clip))


# -------- Reference pipelines -------- #

def identity_pipeline(quant_table: QuantTable) -> PipelineConfig:
    return PipelineConfig('identity', [], quant_table)


def sharpen_pipeline(quant_table: QuantTable, scale: float = 1.0) -> PipelineConfig:
    """
    Returns the 3x3 sharpening pipeline S, optionally scaled (0.5 gives the 0.5S pipeline).

    Args:
        quant_table (QuantTable): Table of the pipeline.
        scale (float, optional): Multiplier of the kernel. Defaults to 1.0.
    """
    identifier = 'S' if scale == 1.0 else f'{scale:g}S'
    return PipelineConfig(identifier, [convolve(scale * SHARPEN_S)], quant_table)


def default_catalog(quant_table: QuantTable) -> List[PipelineConfig]:
    """
    Returns the default source catalog: eight pipelines spanning blur and sharpen strengths.

    The last two entries are denoise-then-sharpen developments (blur followed by a thresholded unsharp mask).

    Args:
        quant_table (QuantTable): Table shared by all entries.

    Returns:
        List[PipelineConfig]: The catalog.
    """
    return [
        identity_pipeline(quant_table),
        sharpen_pipeline(quant_table),
        sharpen_pipeline(quant_table, 0.5),
        PipelineConfig('usm-r0.7-a0.5', [unsharp_mask(0.7, 0.5)], quant_table),
        PipelineConfig('usm-r1.0-a1.5', [unsharp_mask(1.0, 1.5)], quant_table),
        PipelineConfig('blur-r0.6', [blur(0.6)], quant_table),
        PipelineConfig('denoise-sharpen-r0.5', [blur(0.5), unsharp_mask(0.5, 2.0, threshold=1.0)], quant_table),
        PipelineConfig('denoise-sharpen-r1.0', [blur(0.7), unsharp_mask(1.0, 2.0, threshold=1.0)], quant_table),
    ]


def load_catalog(path: str, quant_override: Optional[QuantTable] = None) -> List[PipelineConfig]:
    """
    Reads a pipeline catalog file.

    Args:
        path (str): JSON file of the form {"pipelines": [entry, ...]}.
        quant_override (QuantTable, optional): Replaces every entry's table (e.g. with the target's table).

    Returns:
        List[PipelineConfig]: The pipelines in file order.

    Raises:
        InvalidPipelineException: If the file is unreadable, empty or malformed.
    """
    try:
        with open(path, 'r') as file_handler:
            document = json.load(file_handler)
    except Exception:
        msg = f"Failed to read pipeline catalog '{path}'."
        logger.exception(msg)
        raise InvalidPipelineException(msg)

    entries = document.get('pipelines') if isinstance(document, dict) else None
    if not entries:
        raise InvalidPipelineException(f"Pipeline catalog '{path}' holds no pipelines.")
    pipelines = [PipelineConfig.from_dict(entry) for entry in entries]
    if quant_override is not None:
        pipelines = [pipeline.with_quant_table(quant_override) for pipeline in pipelines]
    identifiers = [pipeline.identifier for pipeline in pipelines]
    if len(set(identifiers)) != len(identifiers):
        raise InvalidPipelineException(f"Pipeline identifiers must be unique in '{path}'.")
    logger.info(f"Loaded {len(pipelines)} pipelines from '{path}'.")
    return pipelines


def save_catalog(pipelines: List[PipelineConfig], path: str) -> str:
    """
    Writes pipelines to a catalog file.

    Args:
        pipelines (List[PipelineConfig]): Pipelines to write.
        path (str): Destination JSON file.

    Returns:
        str: The written path.
    """
    with open(path, 'w') as file_handler:
        json.dump({'pipelines': [pipeline.to_dict() for pipeline in pipelines]}, file_handler, indent=2)
    return path


def find_pipeline(pipelines: List[PipelineConfig], identifier: str) -> PipelineConfig:
    """
    Returns the pipeline with the given identifier.

    Raises:
        InvalidPipelineException: If no pipeline matches.
    """
    lookup: Dict[str, PipelineConfig] = {pipeline.identifier: pipeline for pipeline in pipelines}
    if identifier not in lookup:
        raise InvalidPipelineException(f"Unknown pipeline '{identifier}', known: {sorted(lookup)}.")
    return lookup[identifier]
