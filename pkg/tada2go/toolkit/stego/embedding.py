import math
from typing import List, NamedTuple, Sequence, Union

import numpy as np
from scipy.special import entr

from tada2go.toolkit.exceptions.exceptions import (InfeasiblePayloadException,
                                                   InvalidEmbeddingConfigException)
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs, count_nzac
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.stego.costs import CostMap, scheme_costs
from tada2go.toolkit.utils.constants import (EMBEDDING_SCHEMES,
                                             MAX_PAYLOAD_BPNZAC)

LOG2_3 = math.log2(3.0)
MAX_BISECTIONS = 200


class EmbeddingConfig(NamedTuple):
    """
    Named tuple for the simulated embedding settings.

    Attributes:
        scheme (str): 'UERD' or 'uniform-cost'.
        payload_bpnzac (float): Payload in bits per non-zero AC coefficient, in (0, 1.5].
        seed (int): Seed of the change draws.
    """
    scheme: str = 'UERD'
    payload_bpnzac: float = 0.5
    seed: int = 0

    def validated(self) -> 'EmbeddingConfig':
        """
        Raises:
            InvalidEmbeddingConfigException: If the scheme is unknown or the payload out of range.
        """
        if self.scheme not in EMBEDDING_SCHEMES:
            raise InvalidEmbeddingConfigException(f"Unknown embedding scheme '{self.scheme}'.")
        if not 0.0 < self.payload_bpnzac <= MAX_PAYLOAD_BPNZAC:
            raise InvalidEmbeddingConfigException(
                f"Payload must lie in (0, {MAX_PAYLOAD_BPNZAC}] bpnzac, got {self.payload_bpnzac}.")
        return self


class EmbeddingProbabilities(NamedTuple):
    lam: float
    change_probability: np.ndarray
    target_bits: float


def change_probabilities(costs: np.ndarray, lam: float) -> np.ndarray:
    """p(+1) = p(-1) = exp(-lam rho) / (1 + 2 exp(-lam rho)); zero on wet entries."""
    finite = np.isfinite(costs)
    if math.isinf(lam):
        return np.zeros(costs.shape)
    weights = np.exp(-lam * np.where(finite, costs, 0.0))
    return np.where(finite, weights / (1.0 + 2.0 * weights), 0.0)


def ternary_entropy(p: np.ndarray) -> float:
    """Total entropy in bits of independent ternary changes with probabilities (p, p, 1 - 2p)."""
    return float(np.sum(2.0 * entr(p) + entr(1.0 - 2.0 * p)) / math.log(2.0))


def payload_lambda_search(costs: Union[CostMap, np.ndarray], target_bits: float, tol: float = 1e-4) -> float:
    """
    Finds the Lagrange multiplier whose change probabilities carry target_bits of ternary entropy.

    Args:
        costs (CostMap or np.ndarray): Costs, infinite on wet entries.
        target_bits (float): Payload in bits.
        tol (float, optional): Relative tolerance on the entropy. Defaults to 1e-4.

    Returns:
        float: lambda >= 0; infinity for a non-positive target.

    Raises:
        InfeasiblePayloadException: If target_bits exceeds the maximal entropy of the embeddable coefficients.
    """
    values = costs.costs if isinstance(costs, CostMap) else np.asarray(costs, dtype=np.float64)
    if target_bits <= 0:
        return math.inf
    capacity = int(np.count_nonzero(np.isfinite(values))) * LOG2_3
    if target_bits > capacity * (1.0 + tol):
        raise InfeasiblePayloadException(
            f"Payload of {target_bits:.1f} bits exceeds the capacity of {capacity:.1f} bits.")
    if target_bits >= capacity * (1.0 - tol):
        return 0.0

    def entropy(lam: float) -> float:
        return ternary_entropy(change_probabilities(values, lam))

    low, high = 0.0, 1.0
    while entropy(high) > target_bits:
        low, high = high, 2.0 * high
        if high > 1e300:
            raise InfeasiblePayloadException("Lambda search did not bracket the payload.")

    lam = high
    for _ in range(MAX_BISECTIONS):
        lam = 0.5 * (low + high)
        current = entropy(lam)
        if abs(current - target_bits) <= tol * target_bits:
            break
        if current > target_bits:
            low = lam
        else:
            high = lam
    return lam


def embedding_probabilities(coeffs: JpegCoeffs, cfg: EmbeddingConfig) -> EmbeddingProbabilities:
    """
    Costs, multiplier and per-coefficient change probability of a payload-limited sender.

    Returns:
        EmbeddingProbabilities: lambda, the probability map of each of the +1 and -1 changes, and the target bits.
    """
    cfg = cfg.validated()
    cost_map = scheme_costs(coeffs, cfg.scheme)
    target_bits = cfg.payload_bpnzac * count_nzac(coeffs)
    lam = payload_lambda_search(cost_map, target_bits)
    return EmbeddingProbabilities(lam, change_probabilities(cost_map.costs, lam), target_bits)


def simulate_embedding(coeffs: JpegCoeffs, cfg: EmbeddingConfig, stream: int = 0) -> JpegCoeffs:
    """
    Simulates optimal ternary embedding: each coefficient changes by +1 or -1 with probability p each.

    Args:
        coeffs (JpegCoeffs): Hard-quantized cover.
        cfg (EmbeddingConfig): Scheme, payload and seed.
        stream (int, optional): Index of the image within a pool; draws use the seed sequence (seed, stream).

    Returns:
        JpegCoeffs: Integral stego coefficients differing from the cover by at most 1 per coefficient.

    Raises:
        InvalidEmbeddingConfigException: For an invalid configuration.
        InfeasiblePayloadException: If the payload cannot be carried.
    """
    probabilities = embedding_probabilities(coeffs, cfg)
    p = probabilities.change_probability
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, stream]))
    draws = rng.random(p.shape)
    changes = np.where(draws < p, 1, np.where(draws < 2.0 * p, -1, 0)).astype(np.int32)
    return coeffs.with_coeffs(coeffs.coeffs + changes)


def embed_pool(covers: Sequence[JpegCoeffs], cfg: EmbeddingConfig) -> List[JpegCoeffs]:
    """Embeds every cover with its own draw stream (the cover's index)."""
    stegos = [simulate_embedding(cover, cfg, stream=index) for index, cover in enumerate(covers)]
    logger.info(f"Embedded {len(stegos)} images with {cfg.scheme} at {cfg.payload_bpnzac} bpnzac.")
    return stegos
