"""
DCT-residual (DCTR-style) features: histograms of the quantized magnitudes of the image filtered with the
64 undecimated 8x8 DCT basis patterns, collected per JPEG grid phase.
"""
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from tada2go.toolkit.exceptions.exceptions import (ImageIOException,
                                                   InvalidBlockGeometryException,
                                                   SchemaMismatchException)
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs, decompress
from tada2go.toolkit.jpegcodec.dct import dct_basis
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import (BLOCK, DCTR_KERNEL_SIZE,
                                             DCTR_THRESHOLD, LEVEL_SHIFT)

# Smallest quantization step of the residuals, reached from quality 96 upward
MIN_RESIDUAL_STEP = 0.5


def _full_phase_classes() -> np.ndarray:
    # Phases a and 8 - a are merged on each axis: 5 x 5 = 25 classes
    folded = np.minimum(np.arange(BLOCK), BLOCK - np.arange(BLOCK))
    return folded[:, None] * 5 + folded[None, :]


def _lite_phase_classes() -> np.ndarray:
    # Grid-aligned or not on each axis: 2 x 2 = 4 classes
    aligned = (np.arange(BLOCK) != 0).astype(np.int64)
    return aligned[:, None] * 2 + aligned[None, :]


class FeatureSchema(NamedTuple):
    """
    Named tuple for a feature extractor configuration.

    Attributes:
        identifier (str): Schema id recorded on every vector.
        threshold (int): Truncation T of the quantized residual magnitudes.
        phase_map (np.ndarray): 8x8 map from grid phase (i mod 8, j mod 8) to phase class.
    """
    identifier: str
    threshold: int
    phase_map: np.ndarray

    @property
    def phase_count(self) -> int:
        return int(self.phase_map.max()) + 1

    @property
    def dimension(self) -> int:
        return DCTR_KERNEL_SIZE ** 2 * self.phase_count * (self.threshold + 1)


SCHEMAS: Dict[str, FeatureSchema] = {
    'dctr': FeatureSchema('dctr', DCTR_THRESHOLD, _full_phase_classes()),
    'dctr-lite': FeatureSchema('dctr-lite', DCTR_THRESHOLD, _lite_phase_classes()),
}


class FeatureVector(NamedTuple):
    """
    Named tuple for the features of one image.

    Attributes:
        values (np.ndarray): Finite feature values.
        schema_id (str): Schema the values were extracted with.
    """
    values: np.ndarray
    schema_id: str


def get_schema(schema_id: str) -> FeatureSchema:
    """
    Raises:
        SchemaMismatchException: If the schema is unknown.
    """
    if schema_id not in SCHEMAS:
        raise SchemaMismatchException(f"Unknown feature schema '{schema_id}', expected one of {sorted(SCHEMAS)}.")
    return SCHEMAS[schema_id]


def residual_step(quality: float) -> float:
    """Quantization step of the DCT residuals for a JPEG quality factor: 8 (2 - QF / 50), at least 0.5."""
    return max(8.0 * (2.0 - quality / 50.0), MIN_RESIDUAL_STEP)


def dct_residuals(pixels: np.ndarray) -> np.ndarray:
    """
    Correlates an image with the 64 DCT basis patterns on the valid region.

    Returns:
        np.ndarray: (64, H - 7, W - 7) residuals, kernel (k, l) at index 8 k + l.
    """
    windows = sliding_window_view(pixels, (DCTR_KERNEL_SIZE, DCTR_KERNEL_SIZE))
    basis = dct_basis().reshape(DCTR_KERNEL_SIZE ** 2, DCTR_KERNEL_SIZE, DCTR_KERNEL_SIZE)
    return np.einsum('ijmn,kmn->kij', windows, basis, optimize=True)


def dctr_features(coeffs: JpegCoeffs, schema_id: str = 'dctr') -> FeatureVector:
    """
    Extracts phase-aware histograms of quantized DCT residuals.

    The decompressed (unclipped) image is filtered with the 64 DCT basis patterns; magnitudes are divided by
    the step derived from the table's quality, rounded and truncated at T; one normalized histogram of T + 1
    bins is collected per kernel and phase class.

    Args:
        coeffs (JpegCoeffs): Image to describe.
        schema_id (str, optional): 'dctr' (8000 values) or 'dctr-lite' (1280 values). Defaults to 'dctr'.

    Returns:
        FeatureVector: The features.

    Raises:
        InvalidBlockGeometryException: If the image is too small to contain every grid phase.
        SchemaMismatchException: If the schema is unknown.
    """
    schema = get_schema(schema_id)
    pixels = decompress(coeffs).pixels - LEVEL_SHIFT
    if pixels.shape[0] < 2 * BLOCK or pixels.shape[1] < 2 * BLOCK:
        raise InvalidBlockGeometryException(
            f"Images must be at least 16x16 to cover every grid phase, got {pixels.shape[0]}x{pixels.shape[1]}.")

    step = residual_step(coeffs.quant.estimated_quality())
    residuals = dct_residuals(pixels)
    levels = np.minimum(np.floor(np.abs(residuals) / step + 0.5), schema.threshold).astype(np.int64)

    bins = schema.threshold + 1
    rows = np.arange(residuals.shape[1]) % BLOCK
    cols = np.arange(residuals.shape[2]) % BLOCK
    classes = schema.phase_map[rows[:, None], cols[None, :]]
    per_kernel = schema.phase_count * bins
    index = (np.arange(residuals.shape[0])[:, None, None] * per_kernel + classes[None] * bins + levels).ravel()
    counts = np.bincount(index, minlength=residuals.shape[0] * per_kernel).astype(np.float64)
    class_sizes = np.bincount(classes.ravel(), minlength=schema.phase_count).astype(np.float64)
    histograms = counts.reshape(residuals.shape[0], schema.phase_count, bins) / class_sizes[None, :, None]
    return FeatureVector(histograms.ravel(), schema.identifier)


def extract_features(images: Sequence[JpegCoeffs], schema_id: str = 'dctr') -> np.ndarray:
    """
    Features of several images as an N x D matrix.
    """
    matrix = np.vstack([dctr_features(image, schema_id).values for image in images])
    logger.info(f"Extracted {schema_id} features of {matrix.shape[0]} images ({matrix.shape[1]} values each).")
    return matrix


def feature_matrix(vectors: Sequence[FeatureVector], schema_id: str = None) -> Tuple[np.ndarray, str]:
    """
    Stacks feature vectors, checking that they share one schema.

    Returns:
        Tuple[np.ndarray, str]: The N x D matrix and the schema id.

    Raises:
        SchemaMismatchException: If the vectors mix schemas or differ from schema_id.
    """
    if not vectors:
        raise SchemaMismatchException("No feature vector given.")
    schema_ids = {vector.schema_id for vector in vectors}
    if len(schema_ids) != 1 or (schema_id is not None and schema_id not in schema_ids):
        raise SchemaMismatchException(f"Feature schemas do not match: {sorted(schema_ids)} (expected {schema_id}).")
    return np.vstack([vector.values for vector in vectors]), schema_ids.pop()


def to_vectors(matrix: np.ndarray, schema_id: str) -> List[FeatureVector]:
    return [FeatureVector(row, schema_id) for row in np.asarray(matrix, dtype=np.float64)]


def write_feature_csv(matrix: np.ndarray, schema_id: str, path: str, labels: Sequence[int] = None) -> str:
    """
    Writes a feature matrix as CSV: a 'schema_id' column, an optional 'label' column, then f0..f{D-1}.

    Raises:
        ImageIOException: If the file cannot be written.
    """
    frame = pd.DataFrame(np.asarray(matrix), columns=[f"f{i}" for i in range(np.asarray(matrix).shape[1])])
    if labels is not None:
        frame.insert(0, 'label', list(labels))
    frame.insert(0, 'schema_id', schema_id)
    try:
        frame.to_csv(path, index=False, float_format='%.10g')
    except OSError:
        msg = f"Failed to write features to '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"Feature file '{path}'")
    return path


def read_feature_csv(path: str) -> Tuple[np.ndarray, str, np.ndarray]:
    """
    Reads a feature CSV written by write_feature_csv.

    Returns:
        Tuple[np.ndarray, str, np.ndarray]: Matrix, schema id and labels (None when absent).

    Raises:
        ImageIOException: If the file cannot be read.
        SchemaMismatchException: If the rows mix schemas.
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError):
        msg = f"Failed to read features from '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"Feature file '{path}'")
    schema_ids = frame['schema_id'].unique()
    if len(schema_ids) != 1:
        raise SchemaMismatchException(f"Feature file '{path}' mixes schemas {list(schema_ids)}.")
    labels = frame['label'].to_numpy() if 'label' in frame.columns else None
    values = frame[[column for column in frame.columns if column.startswith('f')]].to_numpy(dtype=np.float64)
    return values, str(schema_ids[0]), labels
