from typing import NamedTuple, Union

import numpy as np

from tada2go.toolkit.exceptions.exceptions import (DimensionMismatchException,
                                                   InsufficientSamplesException)
from tada2go.toolkit.residual.patches import ResidualPatchSet


class SecondOrderStats(NamedTuple):
    """
    Named tuple for the second-order statistics of a sample.

    Attributes:
        mean (np.ndarray): D-vector.
        cov (np.ndarray): D x D unbiased sample covariance.
        corr (np.ndarray): D x D correlation; unit diagonal, zero off-diagonal for zero-variance coordinates.
        n (int): Sample count.
    """
    mean: np.ndarray
    cov: np.ndarray
    corr: np.ndarray
    n: int


def _samples(data: Union[ResidualPatchSet, np.ndarray]) -> np.ndarray:
    if isinstance(data, ResidualPatchSet):
        return data.selected_patches()
    array = np.asarray(data, dtype=np.float64)
    if array.ndim != 2:
        raise DimensionMismatchException(f"Samples must form an N x D matrix, got shape {array.shape}.")
    return array


def covariance(samples: np.ndarray) -> np.ndarray:
    """Unbiased (n - 1) sample covariance of the rows of an N x D matrix."""
    centered = samples - samples.mean(axis=0)
    return centered.T @ centered / (samples.shape[0] - 1)


def correlation_from_covariance(cov: np.ndarray) -> np.ndarray:
    std = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    positive = std > 0
    scale = np.where(positive, std, 1.0)
    corr = cov / np.outer(scale, scale)
    corr[~positive, :] = 0.0
    corr[:, ~positive] = 0.0
    np.fill_diagonal(corr, 1.0)
    return corr


def second_order(data: Union[ResidualPatchSet, np.ndarray]) -> SecondOrderStats:
    """
    Computes mean, unbiased covariance and correlation of the selected patches.

    Args:
        data (ResidualPatchSet or np.ndarray): Patch set (selected rows used) or N x D sample matrix.

    Returns:
        SecondOrderStats: The statistics.

    Raises:
        InsufficientSamplesException: If fewer than two samples are available.
    """
    samples = _samples(data)
    if samples.shape[0] < 2:
        raise InsufficientSamplesException(f"Second-order statistics need at least 2 samples, got {samples.shape[0]}.")
    cov = covariance(samples)
    cov = 0.5 * (cov + cov.T)
    return SecondOrderStats(samples.mean(axis=0), cov, correlation_from_covariance(cov), samples.shape[0])


def frobenius_distance(a, b) -> float:
    """
    Squared Frobenius norm of the difference of two matrices.

    Raises:
        DimensionMismatchException: If the shapes differ.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchException(f"Cannot compare matrices of shapes {a.shape} and {b.shape}.")
    return float(np.sum((a - b) ** 2))


def covariance_frobenius_distance(x, y) -> float:
    """
    Squared Frobenius distance between the covariances of two samples without forming the D x D matrices.

    Uses ||Cx - Cy||^2 = ||Cx||^2 + ||Cy||^2 - 2 tr(Cx Cy), each term evaluated on the N x N / N x M Gram matrices.
    Meant for high-dimensional features (D much larger than the sample counts).

    Raises:
        InsufficientSamplesException: If a sample has fewer than two rows.
        DimensionMismatchException: If the feature dimensions differ.
    """
    x = _samples(x)
    y = _samples(y)
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatchException(f"Feature dimensions differ: {x.shape[1]} vs {y.shape[1]}.")
    if x.shape[0] < 2 or y.shape[0] < 2:
        raise InsufficientSamplesException("Covariance distance needs at least 2 samples per set.")
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    nx, ny = x.shape[0] - 1, y.shape[0] - 1
    self_x = np.sum((xc @ xc.T) ** 2) / nx ** 2
    self_y = np.sum((yc @ yc.T) ** 2) / ny ** 2
    cross = np.sum((xc @ yc.T) ** 2) / (nx * ny)
    return float(max(self_x + self_y - 2.0 * cross, 0.0))
