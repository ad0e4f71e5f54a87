import hashlib
from typing import Optional

import numpy as np

from tada2go.toolkit.exceptions.exceptions import InvalidBlockGeometryException
from tada2go.toolkit.utils.constants import ANNEX_K_LUMINANCE


def quality_scale(quality: int) -> int:
    """Conventional IJG scaling percentage for a quality factor in [1, 100]."""
    return 5000 // quality if quality < 50 else 200 - 2 * quality


class QuantTable:
    """8x8 JPEG quantization table. steps[0, 0] is the DC step."""

    def __init__(self, steps, quality_hint: Optional[int] = None) -> None:
        """
        Initializes a QuantTable.

        Args:
            steps (array-like): 8x8 positive integers in natural (row-major) order.
            quality_hint (int, optional): Quality factor the table was derived from, if known.

        Raises:
            InvalidBlockGeometryException: If the table is not 8x8, not integral or has steps below 1.
        """
        array = np.asarray(steps)
        if array.shape != (8, 8):
            raise InvalidBlockGeometryException(f"Quantization tables are 8x8, got shape {array.shape}.")
        if not np.all(np.equal(np.mod(array, 1), 0)) or np.any(array < 1):
            raise InvalidBlockGeometryException("Quantization steps must be integers >= 1.")
        if quality_hint is not None and not 1 <= quality_hint <= 100:
            raise InvalidBlockGeometryException(f"Quality hint must lie in [1, 100], got {quality_hint}.")
        self._steps = array.astype(np.int64)
        self._steps.setflags(write=False)
        self.quality_hint = quality_hint

    @classmethod
    def from_quality(cls, quality: int) -> 'QuantTable':
        """
        Scales the Annex K luminance table to a quality factor with the conventional formula.

        Args:
            quality (int): Quality factor in [1, 100].

        Raises:
            InvalidBlockGeometryException: If the quality is out of range.
        """
        if not 1 <= int(quality) <= 100:
            raise InvalidBlockGeometryException(f"Quality factor must lie in [1, 100], got {quality}.")
        scale = quality_scale(int(quality))
        steps = np.clip((ANNEX_K_LUMINANCE * scale + 50) // 100, 1, 255)
        return cls(steps, quality_hint=int(quality))

    @classmethod
    def from_config(cls, value) -> 'QuantTable':
        """
        Builds a table from its configuration form: 'qf<NN>', an integer quality, or an 8x8 list.
        """
        if isinstance(value, QuantTable):
            return value
        if isinstance(value, str):
            if not value.lower().startswith('qf'):
                raise InvalidBlockGeometryException(f"Quantization table id must look like 'qf85', got '{value}'.")
            return cls.from_quality(int(value[2:]))
        if isinstance(value, (int, np.integer)):
            return cls.from_quality(int(value))
        return cls(value)

    def to_config(self):
        """Inverse of from_config: 'qf<NN>' for quality-derived tables, an 8x8 list otherwise."""
        if self.quality_hint is not None and self == QuantTable.from_quality(self.quality_hint):
            return f"qf{self.quality_hint}"
        return self._steps.tolist()

    @property
    def steps(self) -> np.ndarray:
        return self._steps

    @property
    def identifier(self) -> str:
        """'qf<NN>' for quality-derived tables, a content hash otherwise."""
        if self.quality_hint is not None and self == QuantTable.from_quality(self.quality_hint):
            return f"qf{self.quality_hint}"
        digest = hashlib.sha1(self._steps.astype('<u2').tobytes()).hexdigest()[:8]
        return f"custom-{digest}"

    def estimated_quality(self) -> float:
        """
        Estimates the quality factor by inverting the Annex K scaling.

        Returns:
            float: Quality factor in [1, 100]; the hint when one is set.
        """
        if self.quality_hint is not None:
            return float(self.quality_hint)
        scale = float(np.median(100.0 * self._steps / ANNEX_K_LUMINANCE))
        if scale <= 100.0:
            quality = (200.0 - scale) / 2.0
        else:
            quality = 5000.0 / scale
        return float(np.clip(quality, 1.0, 100.0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantTable):
            return NotImplemented
        return np.array_equal(self._steps, other._steps)

    def __hash__(self) -> int:
        return hash(self._steps.tobytes())

    def __repr__(self) -> str:
        return f"QuantTable({self.identifier})"
