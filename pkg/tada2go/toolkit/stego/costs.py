import numpy as np
from scipy import ndimage

from tada2go.toolkit.exceptions.exceptions import (InfeasiblePayloadException,
                                                   InvalidEmbeddingConfigException)
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import (BASELINE_AC_LIMIT,
                                             EMBEDDING_SCHEMES,
                                             UERD_NEIGHBOR_WEIGHT)

# Weights of the 8 neighbouring blocks
_NEIGHBOURS = np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0]])


class CostMap:
    """Per-coefficient modification costs aligned with JpegCoeffs; wet (forbidden) entries cost infinity."""

    def __init__(self, costs, scheme: str) -> None:
        array = np.asarray(costs, dtype=np.float64)
        if array.ndim != 4 or array.shape[2:] != (8, 8):
            raise InvalidEmbeddingConfigException(f"Cost maps must have shape (bh, bw, 8, 8), got {array.shape}.")
        if np.any(np.isnan(array)) or np.any(array < 0):
            raise InvalidEmbeddingConfigException("Costs must be non-negative.")
        self.costs = array
        self.scheme = scheme

    @property
    def wet(self) -> np.ndarray:
        return ~np.isfinite(self.costs)

    @property
    def embeddable(self) -> int:
        return int(np.count_nonzero(~self.wet))

    def __repr__(self) -> str:
        return f"CostMap({self.scheme}, {self.embeddable} embeddable of {self.costs.size})"


def _checked(coeffs: JpegCoeffs) -> np.ndarray:
    if not coeffs.is_integral:
        raise InvalidEmbeddingConfigException("Embedding needs hard-quantized (integral) coefficients.")
    return coeffs.coeffs


def _base_wet_mask(values: np.ndarray) -> np.ndarray:
    wet = np.zeros(values.shape, dtype=bool)
    wet[..., 0, 0] = True
    wet |= np.abs(values) >= BASELINE_AC_LIMIT
    return wet


def block_energy(coeffs: JpegCoeffs) -> np.ndarray:
    """Per-block energy: sum over AC modes of |coefficient| x quantization step, shape (bh, bw)."""
    weighted = np.abs(_checked(coeffs)).astype(np.float64) * coeffs.quant.steps
    return weighted.sum(axis=(-2, -1)) - weighted[..., 0, 0]


def uerd_costs(coeffs: JpegCoeffs) -> CostMap:
    """
    Uniform-embedding-revisited costs: the quantization step of a mode divided by the energy of its block
    plus a quarter of the energies of the 8 neighbouring blocks.

    DC coefficients, coefficients at the baseline magnitude limit and blocks whose neighbourhood carries no
    energy are wet.

    Args:
        coeffs (JpegCoeffs): Hard-quantized coefficients.

    Returns:
        CostMap: The costs.

    Raises:
        InfeasiblePayloadException: If no coefficient is embeddable (e.g. an all-zero image).
    """
    values = _checked(coeffs)
    energy = block_energy(coeffs)
    denominator = energy + UERD_NEIGHBOR_WEIGHT * ndimage.convolve(energy, _NEIGHBOURS, mode='constant', cval=0.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        costs = coeffs.quant.steps[None, None, :, :] / denominator[:, :, None, None]
    costs = np.where(denominator[:, :, None, None] > 0, costs, np.inf)
    costs = np.where(_base_wet_mask(values), np.inf, costs)
    cost_map = CostMap(costs, 'UERD')
    if cost_map.embeddable == 0:
        raise InfeasiblePayloadException("No embeddable coefficient: the image carries no AC energy.")
    degenerate = int(np.count_nonzero(denominator == 0))
    if degenerate:
        logger.warning(f"{degenerate} zero-energy block neighbourhoods are wet.")
    return cost_map


def uniform_costs(coeffs: JpegCoeffs) -> CostMap:
    """Unit cost for every AC coefficient below the baseline magnitude limit."""
    values = _checked(coeffs)
    return CostMap(np.where(_base_wet_mask(values), np.inf, 1.0), 'uniform-cost')


def scheme_costs(coeffs: JpegCoeffs, scheme: str) -> CostMap:
    """
    Raises:
        InvalidEmbeddingConfigException: If the scheme is unknown.
    """
    if scheme == 'UERD':
        return uerd_costs(coeffs)
    if scheme == 'uniform-cost':
        return uniform_costs(coeffs)
    raise InvalidEmbeddingConfigException(f"Unknown embedding scheme '{scheme}', expected one of {EMBEDDING_SCHEMES}.")
