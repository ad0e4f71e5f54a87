from typing import NamedTuple, Optional, Union

import numpy as np
from scipy.spatial.distance import pdist
from sklearn.metrics.pairwise import rbf_kernel

from tada2go.toolkit.exceptions.exceptions import (DimensionMismatchException,
                                                   InsufficientSamplesException,
                                                   RankDeficiencyException)
from tada2go.toolkit.logs.config_logging import logger

# Relative singular value below which a direction counts as absent
RANK_TOLERANCE = 1e-10


class MMDResult(NamedTuple):
    """
    Named tuple for a squared maximum mean discrepancy.

    Attributes:
        value (float): The estimate clamped at 0.
        raw (float): The estimate as computed (the unbiased form may be slightly negative).
        bandwidth (float): Gaussian kernel bandwidth used.
    """
    value: float
    raw: float
    bandwidth: float


def _matrix(data, name: str) -> np.ndarray:
    array = np.asarray(data, dtype=np.float64)
    if array.ndim != 2:
        raise DimensionMismatchException(f"{name} must be an N x D matrix, got shape {array.shape}.")
    return array


def median_bandwidth(x: np.ndarray, y: np.ndarray) -> float:
    """Median pairwise Euclidean distance over the pooled samples, 1.0 when all samples coincide."""
    pooled = np.vstack([x, y])
    distances = pdist(pooled, 'euclidean')
    median = float(np.median(distances)) if distances.size else 0.0
    return median if median > 0 else 1.0


def mmd(x, y, bandwidth: Union[float, str] = 'auto', biased: bool = False) -> MMDResult:
    """
    Squared MMD between two samples with the Gaussian kernel exp(-||u - v||^2 / (2 bandwidth^2)).

    Args:
        x (array-like): N x D samples.
        y (array-like): M x D samples.
        bandwidth (float or 'auto', optional): Kernel bandwidth; 'auto' is the median heuristic.
        biased (bool, optional): Use the biased V-statistic (diagonal terms included). Defaults to False.

    Returns:
        MMDResult: Clamped value, raw value and the bandwidth.

    Raises:
        InsufficientSamplesException: If N or M is below 2 for the unbiased form.
        DimensionMismatchException: If the dimensions differ.
    """
    x = _matrix(x, 'X')
    y = _matrix(y, 'Y')
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatchException(f"Sample dimensions differ: {x.shape[1]} vs {y.shape[1]}.")
    minimum = 1 if biased else 2
    if x.shape[0] < minimum or y.shape[0] < minimum:
        raise InsufficientSamplesException(f"MMD needs at least {minimum} samples per set.")

    if bandwidth == 'auto':
        bandwidth = median_bandwidth(x, y)
        logger.info(f"MMD median-heuristic bandwidth: {bandwidth:.6g}")
    bandwidth = float(bandwidth)
    if bandwidth <= 0:
        raise DimensionMismatchException(f"Bandwidth must be positive, got {bandwidth}.")

    gamma = 1.0 / (2.0 * bandwidth ** 2)
    k_xx = rbf_kernel(x, x, gamma=gamma)
    k_yy = rbf_kernel(y, y, gamma=gamma)
    k_xy = rbf_kernel(x, y, gamma=gamma)
    n, m = x.shape[0], y.shape[0]
    if biased:
        raw = k_xx.mean() + k_yy.mean() - 2.0 * k_xy.mean()
    else:
        raw = ((k_xx.sum() - np.trace(k_xx)) / (n * (n - 1))
               + (k_yy.sum() - np.trace(k_yy)) / (m * (m - 1))
               - 2.0 * k_xy.mean())
    return MMDResult(max(float(raw), 0.0), float(raw), bandwidth)


def subspace_basis(data, k: int) -> np.ndarray:
    """
    Top-k principal directions of a sample (eigenvectors of its covariance).

    Args:
        data (array-like): N x D samples.
        k (int): Number of directions.

    Returns:
        np.ndarray: D x k orthonormal basis.

    Raises:
        RankDeficiencyException: If k is out of range or the centered data has rank below k.
    """
    samples = _matrix(data, 'Samples')
    if k < 1 or k > min(samples.shape):
        raise RankDeficiencyException(f"Subspace dimension {k} outside [1, {min(samples.shape)}].")
    centered = samples - samples.mean(axis=0)
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(singular > RANK_TOLERANCE * max(float(singular[0]) if singular.size else 0.0, 1e-300)))
    if rank < k:
        raise RankDeficiencyException(f"Centered data has rank {rank}, below the requested subspace dimension {k}.")
    return vt[:k].T


def chordal_distance(x, y, k: int, basis_x: Optional[np.ndarray] = None,
                     basis_y: Optional[np.ndarray] = None) -> float:
    """
    Normalized chordal distance between the k-dimensional principal subspaces of two samples.

    Args:
        x (array-like): N x D samples.
        y (array-like): M x D samples.
        k (int): Subspace dimension, 1 <= k <= min(N, M, D).
        basis_x (np.ndarray, optional): Precomputed basis of x.
        basis_y (np.ndarray, optional): Precomputed basis of y.

    Returns:
        float: sqrt(k - ||Ux^T Uy||_F^2) / sqrt(k), in [0, 1].

    Raises:
        RankDeficiencyException: If either sample has rank below k.
    """
    u_x = subspace_basis(x, k) if basis_x is None else basis_x[:, :k]
    u_y = subspace_basis(y, k) if basis_y is None else basis_y[:, :k]
    if u_x.shape[0] != u_y.shape[0]:
        raise DimensionMismatchException(f"Sample dimensions differ: {u_x.shape[0]} vs {u_y.shape[0]}.")
    overlap = float(np.sum((u_x.T @ u_y) ** 2))
    return float(np.sqrt(max(k - overlap, 0.0) / k))
