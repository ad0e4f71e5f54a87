from typing import Callable, Dict, NamedTuple

import numpy as np
import pandas as pd
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import Pipeline, make_pipeline
from sklearn.preprocessing import StandardScaler

from tada2go.toolkit.alignmetrics.discrepancy import chordal_distance, mmd
from tada2go.toolkit.alignmetrics.statistics import \
    covariance_frobenius_distance
from tada2go.toolkit.alignmetrics.transport import sinkhorn_divergence
from tada2go.toolkit.baselines.catalog import SourceCatalog, TargetBundle
from tada2go.toolkit.exceptions.exceptions import (DegenerateLabelsException,
                                                   InsufficientSamplesException,
                                                   SchemaMismatchException)
from tada2go.toolkit.logs.config_logging import logger

# Largest principal subspace compared by the chordal distance
NSCD_DIMENSION = 10
SELECTION_METRICS = ('NSCD', 'cov-frobenius', 'MMD', 'wasserstein')


def _nscd(source: np.ndarray, target: np.ndarray) -> float:
    k = min(NSCD_DIMENSION, source.shape[0] - 1, target.shape[0] - 1, source.shape[1])
    if k < 1:
        raise InsufficientSamplesException("The chordal distance needs at least 2 images per side.")
    return chordal_distance(source, target, k)


METRIC_FUNCTIONS: Dict[str, Callable[[np.ndarray, np.ndarray], float]] = {
    'NSCD': _nscd,
    'cov-frobenius': covariance_frobenius_distance,
    'MMD': lambda source, target: mmd(source, target).value,
    'wasserstein': lambda source, target: sinkhorn_divergence(source, target).value,
}


class SelectionResult(NamedTuple):
    """
    Named tuple for a closest-source decision.

    Attributes:
        index (int): Selected catalog index.
        identifier (str): Selected pipeline.
        metric (str): Metric used.
        table (pd.DataFrame): One row per catalog entry: index, source, value.
    """
    index: int
    identifier: str
    metric: str
    table: pd.DataFrame


class RoutingResult(NamedTuple):
    """
    Named tuple for per-image routing.

    Attributes:
        assignments (np.ndarray): Catalog index of every target image.
        router (Pipeline): Fitted scaler and multinomial classifier.
    """
    assignments: np.ndarray
    router: Pipeline

    def counts(self, size: int) -> np.ndarray:
        return np.bincount(self.assignments, minlength=size)


def _target_features(catalog: SourceCatalog, target: TargetBundle) -> np.ndarray:
    features = target.features(catalog.schema_id, catalog.workers)
    expected = catalog[0].labeled.cover_features.shape[1]
    if features.shape[1] != expected:
        raise SchemaMismatchException(f"Target features have {features.shape[1]} values, catalog {expected}.")
    return features


def metric_table(catalog: SourceCatalog, target: TargetBundle, metric: str) -> pd.DataFrame:
    """
    Distance between every source's cover features and the target features.

    Raises:
        SchemaMismatchException: If the metric is unknown or the features differ in length.
    """
    if metric not in METRIC_FUNCTIONS:
        raise SchemaMismatchException(f"Unknown selection metric '{metric}', expected one of {SELECTION_METRICS}.")
    target_features = _target_features(catalog, target)
    function = METRIC_FUNCTIONS[metric]
    values = [function(entry.labeled.cover_features, target_features) for entry in catalog]
    return pd.DataFrame({'index': range(len(catalog)), 'source': catalog.identifiers, 'value': values})


def select_closest_source(catalog: SourceCatalog, target: TargetBundle, metric: str) -> SelectionResult:
    """
    Selects the source whose cover features are closest to the unlabeled target features.

    Args:
        catalog (SourceCatalog): Candidate sources.
        target (TargetBundle): Unlabeled target images.
        metric (str): 'NSCD', 'cov-frobenius', 'MMD' or 'wasserstein'.

    Returns:
        SelectionResult: The argmin (lowest index on ties) and the full metric table.

    Raises:
        SchemaMismatchException: If the metric is unknown or the features differ in length.
    """
    table = metric_table(catalog, target, metric)
    index = int(np.argmin(table['value'].to_numpy()))
    logger.info(f"Closest source under {metric} for '{target.identifier}': {catalog[index].identifier}\n"
                f"{table.to_string(index=False)}")
    return SelectionResult(index, catalog[index].identifier, metric, table)


def fit_router(catalog: SourceCatalog, strength: float = 1.0, max_iter: int = 1000) -> Pipeline:
    """
    Trains a multinomial logistic classifier recognizing the pipeline of a cover from its features.

    Raises:
        DegenerateLabelsException: If the catalog has fewer than two sources.
    """
    if len(catalog) < 2:
        raise DegenerateLabelsException("Routing needs a catalog of at least two sources.")
    x = np.vstack([entry.labeled.cover_features for entry in catalog])
    y = np.concatenate([np.full(entry.labeled.count, index) for index, entry in enumerate(catalog)])
    router = make_pipeline(StandardScaler(), LogisticRegression(C=strength, max_iter=max_iter))
    return router.fit(x, y)


def multiclassifier_route(catalog: SourceCatalog, target: TargetBundle, strength: float = 1.0) -> RoutingResult:
    """
    Assigns each target image to the catalog source its features most likely come from.

    Args:
        catalog (SourceCatalog): At least two sources.
        target (TargetBundle): Unlabeled target images.
        strength (float, optional): Inverse regularization of the routing classifier.

    Returns:
        RoutingResult: Per-image catalog indices and the fitted router.

    Raises:
        DegenerateLabelsException: If the catalog has fewer than two sources.
    """
    router = fit_router(catalog, strength)
    assignments = router.predict(_target_features(catalog, target)).astype(np.int64)
    result = RoutingResult(assignments, router)
    summary = ', '.join(f"{identifier}={count}"
                        for identifier, count in zip(catalog.identifiers, result.counts(len(catalog))))
    logger.info(f"Routed {len(target)} images of '{target.identifier}': {summary}")
    return result


def routed_predict(catalog: SourceCatalog, router: Pipeline, features: np.ndarray) -> np.ndarray:
    """Stego (1) or cover (0) decision of every image, each by the detector of the source it is routed to."""
    assignments = router.predict(features).astype(np.int64)
    predictions = np.zeros(features.shape[0], dtype=np.int64)
    for index in np.unique(assignments):
        rows = assignments == index
        predictions[rows] = catalog[int(index)].detector.predict(features[rows])
    return predictions
