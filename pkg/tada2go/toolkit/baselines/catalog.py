"""
Labeled source material for the comparison strategies: one catalog entry per development pipeline, and the
unlabeled target bundle the strategies adapt to.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, NamedTuple, Optional, Sequence, TypeVar

import numpy as np

from tada2go.toolkit.emulator.loss import shared_quant_table
from tada2go.toolkit.exceptions.exceptions import (EmptySelectionException,
                                                   SchemaMismatchException)
from tada2go.toolkit.imagery.image import GrayImage, RawPool
from tada2go.toolkit.imagery.pipeline import PipelineConfig, develop
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs, compress_hard
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.steganalysis.detector import Detector, train_detector
from tada2go.toolkit.steganalysis.features import dctr_features
from tada2go.toolkit.stego.embedding import EmbeddingConfig, embed_pool

Item = TypeVar('Item')
Result = TypeVar('Result')

# Default upper bound of an operational set
MAX_TARGET_IMAGES = 500


def parallel_map(function: Callable[[Item], Result], items: Sequence[Item], workers: int = 1) -> List[Result]:
    """Applies function to every item, in a thread pool when workers > 1, keeping the input order."""
    if workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))


class LabeledSet(NamedTuple):
    """
    Named tuple for paired cover and stego images with their features.

    Attributes:
        covers (List[JpegCoeffs]): Hard-quantized covers.
        stegos (List[JpegCoeffs]): Stego image i embeds into cover i.
        cover_features (np.ndarray): N x D cover features.
        stego_features (np.ndarray): N x D stego features.
        schema_id (str): Feature schema.
    """
    covers: List[JpegCoeffs]
    stegos: List[JpegCoeffs]
    cover_features: np.ndarray
    stego_features: np.ndarray
    schema_id: str

    @property
    def count(self) -> int:
        return len(self.covers)


class CatalogEntry(NamedTuple):
    """
    Named tuple for one source of the catalog.

    Attributes:
        pipeline (PipelineConfig): Development pipeline of the source.
        developed (List[GrayImage]): Developed, block-aligned, not yet compressed covers.
        labeled (LabeledSet): Compressed covers, stegos and their features.
        detector (Detector): Detector trained on this source alone.
    """
    pipeline: PipelineConfig
    developed: List[GrayImage]
    labeled: LabeledSet
    detector: Detector

    @property
    def identifier(self) -> str:
        return self.pipeline.identifier


class SourceCatalog:
    """A non-empty list of catalog entries sharing one feature schema and one embedding configuration."""

    def __init__(self, entries: List[CatalogEntry], embedding: EmbeddingConfig, workers: int = 1) -> None:
        if not entries:
            raise EmptySelectionException("A source catalog needs at least one entry.")
        schemas = {entry.labeled.schema_id for entry in entries}
        if len(schemas) != 1:
            raise SchemaMismatchException(f"Catalog entries mix feature schemas {sorted(schemas)}.")
        self.entries = list(entries)
        self.embedding = embedding
        self.schema_id = schemas.pop()
        self.workers = workers

    @property
    def identifiers(self) -> List[str]:
        return [entry.identifier for entry in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> CatalogEntry:
        return self.entries[index]

    def __iter__(self):
        return iter(self.entries)

    def __repr__(self) -> str:
        return f"SourceCatalog({self.identifiers}, {self.schema_id})"


class TargetBundle:
    """
    Unlabeled target images sharing one quantization table.

    Labels of an operational set stay with the harness: this class holds none.
    """

    def __init__(self, images: Sequence[JpegCoeffs], identifier: str = 'target',
                 max_count: int = MAX_TARGET_IMAGES) -> None:
        """
        Initializes a TargetBundle.

        Args:
            images (Sequence[JpegCoeffs]): Target images.
            identifier (str, optional): Name used in reports.
            max_count (int, optional): Largest accepted number of images.

        Raises:
            EmptySelectionException: If no image, or more than max_count images, are given.
            QuantTableMismatchException: If the images use different tables.
        """
        if not 1 <= len(images) <= max_count:
            raise EmptySelectionException(f"A target bundle holds 1 to {max_count} images, got {len(images)}.")
        self._images = tuple(images)
        self.quant_table: QuantTable = shared_quant_table(self._images)
        self.identifier = identifier
        self._features = {}

    @property
    def images(self) -> List[JpegCoeffs]:
        return list(self._images)

    def features(self, schema_id: str, workers: int = 1) -> np.ndarray:
        """Target feature matrix, computed once per schema."""
        if schema_id not in self._features:
            self._features[schema_id] = feature_stack(self._images, schema_id, workers)
        return self._features[schema_id]

    def __len__(self) -> int:
        return len(self._images)

    def __repr__(self) -> str:
        return f"TargetBundle({self.identifier}, {len(self)} images, {self.quant_table.identifier})"


def feature_stack(images: Sequence[JpegCoeffs], schema_id: str, workers: int = 1) -> np.ndarray:
    rows = parallel_map(lambda image: dctr_features(image, schema_id).values, list(images), workers)
    matrix = np.vstack(rows)
    logger.info(f"Extracted {schema_id} features of {matrix.shape[0]} images.")
    return matrix


def develop_covers(raws: Sequence[GrayImage], pipeline: PipelineConfig, workers: int = 1) -> List[GrayImage]:
    """Develops RAW images with a pipeline and crops them to the JPEG grid (top-left anchored)."""
    return parallel_map(lambda raw: develop(raw, pipeline).block_aligned(), list(raws), workers)


def labeled_set(developed: Sequence[GrayImage], quant: QuantTable, embedding: EmbeddingConfig, schema_id: str,
                workers: int = 1) -> LabeledSet:
    """
    Compresses developed covers, embeds them and extracts cover and stego features.

    Args:
        developed (Sequence[GrayImage]): Block-aligned developed images.
        quant (QuantTable): Compression table.
        embedding (EmbeddingConfig): Scheme, payload and seed; image i uses draw stream i.
        schema_id (str): Feature schema.
        workers (int, optional): Threads for per-image work.

    Returns:
        LabeledSet: The paired set.
    """
    covers = parallel_map(lambda image: compress_hard(image, quant), list(developed), workers)
    stegos = embed_pool(covers, embedding)
    return LabeledSet(covers, stegos, feature_stack(covers, schema_id, workers),
                      feature_stack(stegos, schema_id, workers), schema_id)


def train_on(labeled: LabeledSet, reg: Optional[float] = None, seed: int = 0) -> Detector:
    return train_detector(labeled.cover_features, labeled.stego_features, reg=reg, seed=seed,
                          schema_id=labeled.schema_id)


def build_catalog(raw_pool: RawPool, pipelines: Sequence[PipelineConfig], quant: QuantTable,
                  embedding: EmbeddingConfig = EmbeddingConfig(), schema_id: str = 'dctr',
                  reg: Optional[float] = None, seed: int = 0, workers: int = 1) -> SourceCatalog:
    """
    Builds one labeled source per pipeline: develop, compress with the target table, embed, extract features
    and train a detector.

    Args:
        raw_pool (RawPool): RAW material developed by every pipeline.
        pipelines (Sequence[PipelineConfig]): Catalog pipelines; their own tables are replaced by quant.
        quant (QuantTable): The target's quantization table.
        embedding (EmbeddingConfig, optional): Embedding settings.
        schema_id (str, optional): Feature schema.
        reg (float, optional): Detector regularization, 1 / n_train when unset.
        seed (int, optional): Detector seed.
        workers (int, optional): Threads for per-image work.

    Returns:
        SourceCatalog: The catalog, in pipeline order.

    Raises:
        EmptySelectionException: If no pipeline is given.
    """
    if not pipelines:
        raise EmptySelectionException("A source catalog needs at least one pipeline.")
    entries = []
    for pipeline in pipelines:
        pipeline = pipeline.with_quant_table(quant)
        developed = develop_covers(list(raw_pool), pipeline, workers)
        labeled = labeled_set(developed, quant, embedding, schema_id, workers)
        entries.append(CatalogEntry(pipeline, developed, labeled, train_on(labeled, reg, seed)))
        logger.info(f"Catalog source '{pipeline.identifier}': {labeled.count} cover-stego pairs.")
    return SourceCatalog(entries, embedding, workers)


def build_all_mixture(catalog: SourceCatalog, quant: QuantTable) -> LabeledSet:
    """
    Mixes every catalog source, recompressed with the target table, into one balanced training set.

    Each source contributes the same number of pairs (the smallest source size), in catalog order.

    Args:
        catalog (SourceCatalog): Non-empty catalog.
        quant (QuantTable): Target quantization table.

    Returns:
        LabeledSet: The mixed training set.
    """
    per_source = min(len(entry.developed) for entry in catalog)
    parts = []
    for entry in catalog:
        if entry.pipeline.quant_table == quant:
            labeled = entry.labeled
        else:
            labeled = labeled_set(entry.developed, quant, catalog.embedding, catalog.schema_id, catalog.workers)
        parts.append(labeled)
    logger.info(f"Mixture of {len(catalog)} sources, {per_source} pairs each, compressed with {quant.identifier}.")
    return LabeledSet(
        [cover for part in parts for cover in part.covers[:per_source]],
        [stego for part in parts for stego in part.stegos[:per_source]],
        np.vstack([part.cover_features[:per_source] for part in parts]),
        np.vstack([part.stego_features[:per_source] for part in parts]),
        catalog.schema_id,
    )
