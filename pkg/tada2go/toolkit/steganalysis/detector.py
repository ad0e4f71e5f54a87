import json
import os
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from tada2go.toolkit.exceptions.exceptions import (DegenerateLabelsException,
                                                   ImageIOException,
                                                   InsufficientSamplesException,
                                                   SchemaMismatchException)
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.steganalysis.features import FeatureVector, feature_matrix

DETECTOR_FORMAT = 'tada2go-detector'
DETECTOR_VERSION = 1
ARMIJO_C = 1e-4

Features = Union[np.ndarray, Sequence[FeatureVector]]


def _as_matrix(features: Features, schema_id: Optional[str]) -> Tuple[np.ndarray, Optional[str]]:
    if isinstance(features, np.ndarray):
        matrix = features.astype(np.float64)
        if matrix.ndim == 1:
            matrix = matrix[None, :]
        return matrix, schema_id
    return feature_matrix(features, schema_id)


class Detector:
    """Standardized linear logistic detector; label 0 is cover, 1 is stego."""

    def __init__(self, weights, bias: float, mean, scale, schema_id: str, reg: float, seed: int = 0,
                 iterations: int = 0, converged: bool = True) -> None:
        """
        Initializes a Detector.

        Args:
            weights (array-like): One weight per standardized feature.
            bias (float): Intercept.
            mean (array-like): Per-feature training mean.
            scale (array-like): Per-feature training standard deviation (1 where constant).
            schema_id (str): Feature schema the detector expects.
            reg (float): L2 regularization strength it was trained with.
            seed (int, optional): Recorded training seed.
            iterations (int, optional): Gradient iterations run.
            converged (bool, optional): Whether the gradient tolerance was met.
        """
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)
        self.mean = np.asarray(mean, dtype=np.float64)
        self.scale = np.asarray(scale, dtype=np.float64)
        if not (self.weights.shape == self.mean.shape == self.scale.shape):
            raise SchemaMismatchException("Detector weights and standardization lengths differ.")
        if np.any(self.scale <= 0):
            raise SchemaMismatchException("Standardization scales must be positive.")
        self.schema_id = schema_id
        self.reg = float(reg)
        self.seed = seed
        self.iterations = iterations
        self.converged = converged

    def _checked(self, features: Features) -> np.ndarray:
        matrix, schema_id = _as_matrix(features, None)
        if schema_id is not None and schema_id != self.schema_id:
            raise SchemaMismatchException(f"Detector expects '{self.schema_id}' features, got '{schema_id}'.")
        if matrix.shape[1] != self.weights.size:
            raise SchemaMismatchException(
                f"Detector expects {self.weights.size} features, got {matrix.shape[1]}.")
        return matrix

    def decision_function(self, features: Features) -> np.ndarray:
        return ((self._checked(features) - self.mean) / self.scale) @ self.weights + self.bias

    def predict_proba(self, features: Features) -> np.ndarray:
        """Probability of the stego class."""
        return expit(self.decision_function(features))

    def predict(self, features: Features) -> np.ndarray:
        """1 (stego) where the stego probability reaches 0.5, 0 (cover) elsewhere."""
        return (self.predict_proba(features) >= 0.5).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            'format': DETECTOR_FORMAT,
            'version': DETECTOR_VERSION,
            'schema_id': self.schema_id,
            'reg': self.reg,
            'seed': self.seed,
            'iterations': self.iterations,
            'converged': self.converged,
            'bias': self.bias,
            'weights': self.weights.tolist(),
            'mean': self.mean.tolist(),
            'scale': self.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, record: dict) -> 'Detector':
        if record.get('format') != DETECTOR_FORMAT or record.get('version') != DETECTOR_VERSION:
            raise SchemaMismatchException(
                f"Unsupported detector record (format {record.get('format')}, version {record.get('version')}).")
        return cls(record['weights'], record['bias'], record['mean'], record['scale'], record['schema_id'],
                   record['reg'], record.get('seed', 0), record.get('iterations', 0), record.get('converged', True))

    def save(self, path: str) -> str:
        """
        Raises:
            ImageIOException: If the file cannot be written.
        """
        try:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, 'w') as file_handler:
                json.dump(self.to_dict(), file_handler)
        except OSError:
            msg = f"Failed to write detector '{path}'."
            logger.exception(msg)
            raise ImageIOException(f"Detector '{path}'")
        return path

    @classmethod
    def load(cls, path: str) -> 'Detector':
        """
        Raises:
            ImageIOException: If the file cannot be read.
            SchemaMismatchException: If the record is not a supported detector.
        """
        try:
            with open(path, 'r') as file_handler:
                record = json.load(file_handler)
        except (OSError, json.JSONDecodeError):
            msg = f"Failed to read detector '{path}'."
            logger.exception(msg)
            raise ImageIOException(f"Detector '{path}'")
        return cls.from_dict(record)

    def __repr__(self) -> str:
        return f"Detector({self.schema_id}, {self.weights.size} features, reg={self.reg:.3g})"


def _objective(theta: np.ndarray, z: np.ndarray, y: np.ndarray, reg: float) -> Tuple[float, np.ndarray]:
    weights, bias = theta[:-1], theta[-1]
    margin = z @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, margin) - y * margin) + 0.5 * reg * weights @ weights)
    residual = expit(margin) - y
    grad = np.empty_like(theta)
    grad[:-1] = z.T @ residual / y.size + reg * weights
    grad[-1] = residual.mean()
    return loss, grad


def train_detector(covers: Features, stegos: Features, reg: Optional[float] = None, seed: int = 0,
                   schema_id: Optional[str] = None, max_iter: int = 2000, tol: float = 1e-6) -> Detector:
    """
    Trains an L2-regularized logistic regression separating covers (0) from stegos (1).

    Features are standardized with the training mean and standard deviation. The objective
    mean log-loss + reg / 2 ||w||^2 (intercept unregularized) is minimized by gradient descent from zero with
    Barzilai-Borwein steps and Armijo backtracking, until the gradient norm drops below tol.

    Args:
        covers (Features): Cover features (FeatureVectors or an N x D matrix).
        stegos (Features): Stego features.
        reg (float, optional): Regularization strength. Defaults to 1 / number of training examples.
        seed (int, optional): Recorded for provenance; the optimization is deterministic.
        schema_id (str, optional): Expected schema.
        max_iter (int, optional): Iteration cap.
        tol (float, optional): Gradient-norm tolerance.

    Returns:
        Detector: The trained detector.

    Raises:
        SchemaMismatchException: If the two sets use different schemas or lengths.
        DegenerateLabelsException: If a class has fewer than two examples.
    """
    cover_matrix, cover_schema = _as_matrix(covers, schema_id)
    stego_matrix, stego_schema = _as_matrix(stegos, schema_id)
    if cover_schema != stego_schema or cover_matrix.shape[1] != stego_matrix.shape[1]:
        raise SchemaMismatchException(f"Cover features ({cover_schema}, {cover_matrix.shape[1]}) and stego "
                                      f"features ({stego_schema}, {stego_matrix.shape[1]}) differ.")
    if cover_matrix.shape[0] < 2 or stego_matrix.shape[0] < 2:
        raise DegenerateLabelsException(
            f"Need at least 2 examples per class, got {cover_matrix.shape[0]} covers and {stego_matrix.shape[0]} stegos.")

    x = np.vstack([cover_matrix, stego_matrix])
    y = np.concatenate([np.zeros(cover_matrix.shape[0]), np.ones(stego_matrix.shape[0])])
    reg = 1.0 / y.size if reg is None else float(reg)
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    z = (x - mean) / scale

    theta = np.zeros(z.shape[1] + 1)
    loss, grad = _objective(theta, z, y, reg)
    step = 1.0
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < tol:
            converged = True
            break
        while True:
            candidate = theta - step * grad
            candidate_loss, candidate_grad = _objective(candidate, z, y, reg)
            if candidate_loss <= loss - ARMIJO_C * step * grad_norm ** 2 or step < 1e-16:
                break
            step *= 0.5
        s, g_diff = candidate - theta, candidate_grad - grad
        theta, loss, grad = candidate, candidate_loss, candidate_grad
        curvature = float(s @ g_diff)
        step = float(s @ s) / curvature if curvature > 0 else 1.0

    if not converged:
        logger.warning(f"Detector training stopped at the iteration cap ({max_iter}), gradient norm "
                       f"{np.linalg.norm(grad):.3g}.")
    return Detector(theta[:-1], theta[-1], mean, scale, cover_schema or 'raw', reg, seed, iteration, converged)


def balanced_accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    """
    (TPR + TNR) / 2.

    Raises:
        InsufficientSamplesException: If a class is absent.
    """
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    positives, negatives = labels == 1, labels == 0
    if not positives.any() or not negatives.any():
        raise InsufficientSamplesException("Balanced accuracy needs examples of both classes.")
    tpr = float(np.mean(predictions[positives] == 1))
    tnr = float(np.mean(predictions[negatives] == 0))
    return 0.5 * (tpr + tnr)


def evaluate(detector: Detector, covers: Features, stegos: Features) -> float:
    """
    Balanced accuracy of a detector at threshold 0.5.

    Raises:
        InsufficientSamplesException: If either set is empty.
        SchemaMismatchException: If the features do not match the detector.
    """
    if len(covers) == 0 or len(stegos) == 0:
        raise InsufficientSamplesException("Evaluation needs covers and stegos.")
    predictions = np.concatenate([detector.predict(covers), detector.predict(stegos)])
    labels = np.concatenate([np.zeros(len(covers)), np.ones(len(stegos))])
    return balanced_accuracy(predictions, labels)
