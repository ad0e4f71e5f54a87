"""
Feature-level domain adaptation: subspace alignment and CORAL recoloring.
"""
from typing import NamedTuple, Tuple

import numpy as np
from sklearn.decomposition import PCA

from tada2go.toolkit.exceptions.exceptions import (ConfigurationException,
                                                   DimensionMismatchException,
                                                   InsufficientSamplesException,
                                                   RankDeficiencyException)
from tada2go.toolkit.logs.config_logging import logger

# Relative singular value below which a principal direction is numerically absent
RANK_TOLERANCE = 1e-10


def _checked_pair(source, target) -> Tuple[np.ndarray, np.ndarray]:
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if source.ndim != 2 or target.ndim != 2 or source.shape[1] != target.shape[1]:
        raise DimensionMismatchException(f"Feature matrices differ: {source.shape} vs {target.shape}.")
    if source.shape[0] < 2 or target.shape[0] < 2:
        raise InsufficientSamplesException("Adaptation needs at least 2 samples per domain.")
    return source, target


class SubspaceAlignment(NamedTuple):
    """
    Named tuple for aligned features.

    Attributes:
        source (np.ndarray): Ns x d aligned source features X_s U_s M.
        target (np.ndarray): Nt x d projected target features X_t U_t.
        alignment (np.ndarray): d x d map M = U_s^T U_t.
        source_basis (np.ndarray): D x d source principal directions.
        target_basis (np.ndarray): D x d target principal directions.
    """
    source: np.ndarray
    target: np.ndarray
    alignment: np.ndarray
    source_basis: np.ndarray
    target_basis: np.ndarray

    def project_source(self, features: np.ndarray) -> np.ndarray:
        """Maps further source-domain features into the aligned space."""
        return np.asarray(features, dtype=np.float64) @ self.source_basis @ self.alignment

    def project_target(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) @ self.target_basis


def pca_basis(features: np.ndarray, d: int) -> np.ndarray:
    """
    Top-d principal directions as a D x d matrix.

    Raises:
        RankDeficiencyException: If d exceeds the rank of the centered features.
    """
    if d < 1 or d > min(features.shape[0] - 1, features.shape[1]):
        raise RankDeficiencyException(
            f"Subspace dimension {d} outside [1, {min(features.shape[0] - 1, features.shape[1])}].")
    pca = PCA(n_components=d, svd_solver='full').fit(features)
    singular = pca.singular_values_
    if singular[-1] <= RANK_TOLERANCE * max(singular[0], 1e-300):
        raise RankDeficiencyException(f"Features have rank below the requested subspace dimension {d}.")
    return pca.components_.T


def subspace_align(source_features, target_features, d: int) -> SubspaceAlignment:
    """
    Aligns the d-dimensional principal subspace of the source with the target's.

    M = U_s^T U_t is the minimizer of ||U_s M - U_t||_F. Sources are mapped by X_s U_s M, targets by X_t U_t;
    a detector is then trained and applied in this d-dimensional space.

    Args:
        source_features (array-like): Ns x D source features.
        target_features (array-like): Nt x D target features.
        d (int): Subspace dimension, at most the rank of either centered matrix.

    Returns:
        SubspaceAlignment: Aligned features and the fitted maps.

    Raises:
        RankDeficiencyException: If d exceeds a rank.
        DimensionMismatchException: If the feature lengths differ.
    """
    source, target = _checked_pair(source_features, target_features)
    source_basis = pca_basis(source, d)
    target_basis = pca_basis(target, d)
    alignment = source_basis.T @ target_basis
    logger.info(f"Subspace alignment with d={d}: {source.shape[0]} source and {target.shape[0]} target samples.")
    return SubspaceAlignment(source @ source_basis @ alignment, target @ target_basis, alignment,
                             source_basis, target_basis)


def _regularized_power(features: np.ndarray, eta: float, power: float) -> Tuple[np.ndarray, np.ndarray, float]:
    # (C + eta I)^p = eta^p I + U ((s + eta)^p - eta^p) U^T with C = U diag(s) U^T of rank <= N - 1
    centered = features - features.mean(axis=0)
    _, singular, vt = np.linalg.svd(centered / np.sqrt(features.shape[0] - 1), full_matrices=False)
    eigen = singular ** 2
    if not np.all(np.isfinite(eigen)):
        raise RankDeficiencyException("Covariance is not finite.")
    return vt.T, (eigen + eta) ** power - eta ** power, eta ** power


def _apply_power(features: np.ndarray, basis: np.ndarray, spectrum: np.ndarray, scalar: float) -> np.ndarray:
    return scalar * features + ((features @ basis) * spectrum) @ basis.T


def coral_whiten(source_features, eta: float = 1.0) -> np.ndarray:
    """Source features multiplied by (C_s + eta I)^(-1/2)."""
    source = np.asarray(source_features, dtype=np.float64)
    return _apply_power(source, *_regularized_power(source, eta, -0.5))


def coral_transform(source_features, target_features, eta: float = 1.0) -> np.ndarray:
    """
    Recolors whitened source features with the target covariance:
    X_s' = X_s (C_s + eta I)^(-1/2) (C_t + eta I)^(1/2).

    Matrix powers are applied through the thin SVD of each centered sample, so no D x D matrix is formed.

    Args:
        source_features (array-like): Ns x D source features.
        target_features (array-like): Nt x D target features.
        eta (float, optional): Covariance regularization. Defaults to 1.

    Returns:
        np.ndarray: Ns x D transformed source features.

    Raises:
        ConfigurationException: If eta is not positive.
        RankDeficiencyException: If a covariance is not finite.
    """
    if not eta > 0:
        raise ConfigurationException(f"CORAL regularization must be positive, got {eta}.")
    source, target = _checked_pair(source_features, target_features)
    if not (np.all(np.isfinite(source)) and np.all(np.isfinite(target))):
        raise RankDeficiencyException("Covariance is not finite: features hold non-finite values.")
    whitened = coral_whiten(source, eta)
    return _apply_power(whitened, *_regularized_power(target, eta, 0.5))
