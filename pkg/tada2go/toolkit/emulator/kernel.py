from functools import lru_cache
from typing import Optional

import numpy as np

from tada2go.toolkit.exceptions.exceptions import InvalidKernelException
from tada2go.toolkit.imagery.pipeline import PipelineConfig, convolve
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.utils.constants import (CONSTRAINT_KINDS,
                                             DEFAULT_INIT_SIGMA, KERNEL_SIZES,
                                             SUM_PROJECTIONS)

SYMMETRIC_KINDS = ('symmetry', 'both')
UNIT_SUM_KINDS = ('sum-to-1', 'both')


@lru_cache(maxsize=None)
def orbit_index(size: int) -> np.ndarray:
    """
    Orbit id of every kernel entry under the 8 symmetries of the square.

    Orbits are keyed by (max(|di|, |dj|), min(|di|, |dj|)) of the offset from the centre and numbered
    in sorted key order: 0 is the centre, 1 the direct neighbours, 2 the diagonal neighbours, ...

    Returns:
        np.ndarray: size x size integer array (read-only).
    """
    half = size // 2
    offsets = np.abs(np.arange(size) - half)
    rows, cols = np.meshgrid(offsets, offsets, indexing='ij')
    keys = np.maximum(rows, cols) * size + np.minimum(rows, cols)
    _, index = np.unique(keys, return_inverse=True)
    index = index.reshape(size, size)
    index.setflags(write=False)
    return index


def orbit_count(size: int) -> int:
    half = size // 2
    return (half + 1) * (half + 2) // 2


def _validate(size: int, constraints: str, sum_projection: str) -> None:
    if size not in KERNEL_SIZES:
        raise InvalidKernelException(f"Kernel size must be odd and in {KERNEL_SIZES}, got {size}.")
    if constraints not in CONSTRAINT_KINDS:
        raise InvalidKernelException(f"Unknown constraint '{constraints}', expected one of {CONSTRAINT_KINDS}.")
    if sum_projection not in SUM_PROJECTIONS:
        raise InvalidKernelException(f"Unknown sum projection '{sum_projection}', expected one of {SUM_PROJECTIONS}.")


class KernelParams:
    """
    A learnable development kernel and the constraints enforced on it.

    With symmetry active, the free parameters are the orbit values (3 for size 3, 10 for size 7);
    otherwise every entry is free.
    """

    def __init__(self, kernel, constraints: str = 'both', sum_projection: str = 'uniform') -> None:
        """
        Initializes KernelParams.

        Args:
            kernel (array-like): Odd square matrix of size 3..11.
            constraints (str, optional): 'none', 'sum-to-1', 'symmetry' or 'both'. Defaults to 'both'.
            sum_projection (str, optional): 'uniform' shifts every entry, 'center' adjusts only the centre.

        Raises:
            InvalidKernelException: If the kernel is not square, of an allowed size, or the options are unknown.
        """
        array = np.array(kernel, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise InvalidKernelException(f"Kernels must be square, got shape {array.shape}.")
        _validate(array.shape[0], constraints, sum_projection)
        if not np.all(np.isfinite(array)):
            raise InvalidKernelException("Kernel contains non-finite values.")
        array.setflags(write=False)
        self._kernel = array
        self.constraints = constraints
        self.sum_projection = sum_projection

    @classmethod
    def from_orbit_values(cls, size: int, values, constraints: str = 'both',
                          sum_projection: str = 'uniform') -> 'KernelParams':
        _validate(size, constraints, sum_projection)
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (orbit_count(size),):
            raise InvalidKernelException(f"Size {size} kernels have {orbit_count(size)} orbits, got {values.shape}.")
        return cls(values[orbit_index(size)], constraints, sum_projection)

    @property
    def size(self) -> int:
        return self._kernel.shape[0]

    @property
    def kernel(self) -> np.ndarray:
        return self._kernel

    @property
    def symmetric(self) -> bool:
        return self.constraints in SYMMETRIC_KINDS

    @property
    def orbit_values(self) -> np.ndarray:
        """Mean of the entries of each orbit."""
        index = orbit_index(self.size)
        sums = np.bincount(index.ravel(), weights=self._kernel.ravel())
        return sums / np.bincount(index.ravel())

    def parameters(self) -> np.ndarray:
        """Free parameters: orbit values when symmetry is enforced, the flattened kernel otherwise."""
        return self.orbit_values if self.symmetric else self._kernel.ravel().copy()

    def with_parameters(self, values) -> 'KernelParams':
        """Inverse of parameters(): a kernel of the same size and constraints."""
        values = np.asarray(values, dtype=np.float64)
        if self.symmetric:
            return KernelParams.from_orbit_values(self.size, values, self.constraints, self.sum_projection)
        return KernelParams(values.reshape(self.size, self.size), self.constraints, self.sum_projection)

    def as_pipeline(self, quant_table: QuantTable, identifier: str = 'tada-emulated') -> PipelineConfig:
        """The one-convolution development pipeline this kernel emulates."""
        return PipelineConfig(identifier, [convolve(self._kernel)], quant_table)

    def to_dict(self) -> dict:
        return {
            'size': self.size,
            'constraints': self.constraints,
            'sum_projection': self.sum_projection,
            'kernel': self._kernel.tolist(),
            'orbit_values': self.orbit_values.tolist(),
        }

    @classmethod
    def from_dict(cls, entry: dict) -> 'KernelParams':
        return cls(entry['kernel'], entry.get('constraints', 'both'), entry.get('sum_projection', 'uniform'))

    def __eq__(self, other) -> bool:
        if not isinstance(other, KernelParams):
            return NotImplemented
        return (self.constraints == other.constraints and self.sum_projection == other.sum_projection
                and np.array_equal(self._kernel, other._kernel))

    def __repr__(self) -> str:
        return f"KernelParams(size={self.size}, constraints='{self.constraints}', orbits={np.round(self.orbit_values, 4).tolist()})"


def project_constraints(kernel: KernelParams) -> KernelParams:
    """
    Enforces the kernel's constraints.

    Symmetry replaces each entry by its orbit mean. Sum-to-1 either subtracts (sum - 1) / size^2 from every
    entry ('uniform', the Euclidean projection) or moves the centre alone ('center'). Both together
    symmetrize first; either shift keeps the kernel symmetric. The projection is idempotent.

    Args:
        kernel (KernelParams): Any kernel.

    Returns:
        KernelParams: The projected kernel.
    """
    values = np.array(kernel.kernel)
    if kernel.constraints in SYMMETRIC_KINDS:
        values = kernel.orbit_values[orbit_index(kernel.size)]
    if kernel.constraints in UNIT_SUM_KINDS:
        excess = values.sum() - 1.0
        if kernel.sum_projection == 'uniform':
            values = values - excess / values.size
        else:
            half = kernel.size // 2
            values[half, half] -= excess
    return KernelParams(values, kernel.constraints, kernel.sum_projection)


def identity_kernel(size: int) -> np.ndarray:
    kernel = np.zeros((size, size))
    kernel[size // 2, size // 2] = 1.0
    return kernel


def init_kernel(size: int, sigma: float = DEFAULT_INIT_SIGMA, seed: Optional[int] = None,
                constraints: str = 'both', sum_projection: str = 'uniform') -> KernelParams:
    """
    Identity kernel plus i.i.d. Gaussian noise, projected onto the constraints.

    Args:
        size (int): Odd size in 3..11.
        sigma (float, optional): Noise standard deviation. Defaults to 0.01.
        seed (int, optional): Seed of the noise.
        constraints (str, optional): Constraint kind. Defaults to 'both'.
        sum_projection (str, optional): 'uniform' or 'center'.

    Returns:
        KernelParams: The initial kernel.

    Raises:
        InvalidKernelException: If the size is even or out of range, or sigma is negative.
    """
    _validate(size, constraints, sum_projection)
    if sigma < 0:
        raise InvalidKernelException(f"Initialization noise must be non-negative, got {sigma}.")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=(size, size)) if sigma > 0 else np.zeros((size, size))
    return project_constraints(KernelParams(identity_kernel(size) + noise, constraints, sum_projection))
