"""
Binary coefficient container, the primary on-disk form of JPEG coefficients.

Layout (little-endian):
    magic       4 bytes   b'TADC'
    version     uint8     1
    quality     uint8     quality hint of the table, 0 when unknown
    blocks_h    uint16
    blocks_w    uint16
    quant       64 x uint16, natural (row-major) order
    coeffs      blocks_h * blocks_w * 64 x int16, blocks row-major, each block row-major
"""
import os
import struct

import numpy as np

from tada2go.toolkit.exceptions.exceptions import (ImageIOException,
                                                   JpegParseException)
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import CONTAINER_MAGIC, CONTAINER_VERSION

_HEADER = struct.Struct('<4sBBHH')
_QUANT_BYTES = 64 * 2


def container_bytes(coeffs: JpegCoeffs) -> bytes:
    """
    Serializes hard-quantized coefficients to the container format.

    Raises:
        JpegParseException: If the coefficients are not integral or exceed the int16 range.
    """
    if not coeffs.is_integral:
        raise JpegParseException("only integral (hard-quantized) coefficients can be stored")
    values = coeffs.coeffs
    if values.min(initial=0) < -32768 or values.max(initial=0) > 32767:
        raise JpegParseException("coefficient outside the int16 range")
    quality = coeffs.quant.quality_hint or 0
    header = _HEADER.pack(CONTAINER_MAGIC, CONTAINER_VERSION, quality, coeffs.blocks_h, coeffs.blocks_w)
    return header + coeffs.quant.steps.astype('<u2').tobytes() + values.astype('<i2').tobytes()


def parse_container(data: bytes) -> JpegCoeffs:
    """
    Parses container bytes.

    Raises:
        JpegParseException: On a wrong magic, an unknown version or truncated data.
    """
    if len(data) < _HEADER.size + _QUANT_BYTES:
        raise JpegParseException("container header truncated")
    magic, version, quality, blocks_h, blocks_w = _HEADER.unpack_from(data, 0)
    if magic != CONTAINER_MAGIC:
        raise JpegParseException(f"not a coefficient container (magic {magic!r})")
    if version != CONTAINER_VERSION:
        raise JpegParseException(f"unsupported container version {version}")
    offset = _HEADER.size
    steps = np.frombuffer(data, dtype='<u2', count=64, offset=offset).reshape(8, 8)
    offset += _QUANT_BYTES
    expected = blocks_h * blocks_w * 64 * 2
    if len(data) - offset != expected:
        raise JpegParseException(f"expected {expected} coefficient bytes, found {len(data) - offset}")
    values = np.frombuffer(data, dtype='<i2', offset=offset).reshape(blocks_h, blocks_w, 8, 8)
    quant = QuantTable(steps.astype(np.int64), quality_hint=quality or None)
    return JpegCoeffs(values.astype(np.int32), quant)


def write_container(coeffs: JpegCoeffs, path: str) -> str:
    """
    Writes coefficients to a container file.

    Returns:
        str: The written path.

    Raises:
        ImageIOException: If the file cannot be written.
    """
    payload = container_bytes(coeffs)
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'wb') as file_handler:
            file_handler.write(payload)
    except OSError:
        msg = f"Failed to write container '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"Container '{path}'")
    return path


def read_container(path: str) -> JpegCoeffs:
    """
    Reads a container file.

    Raises:
        ImageIOException: If the file cannot be opened.
        JpegParseException: If its content is malformed.
    """
    try:
        with open(path, 'rb') as file_handler:
            data = file_handler.read()
    except OSError:
        msg = f"Failed to read container '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"Container '{path}'")
    return parse_container(data)
