"""
Minimal baseline JFIF reader and writer for single-component (grayscale) images.

The writer emits standard Annex K Huffman tables. The reader accepts any Huffman tables but only
baseline sequential, single-component, non-restart streams; everything else is rejected naming the marker.
"""
import math
import os
import struct
from typing import Dict, List, Tuple

import numpy as np

from tada2go.toolkit.exceptions.exceptions import (ImageIOException,
                                                   JpegParseException,
                                                   UnsupportedJpegException)
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import (BASELINE_AC_LIMIT, ZIGZAG,
                                             STD_AC_LUMINANCE_BITS,
                                             STD_AC_LUMINANCE_VALUES,
                                             STD_DC_LUMINANCE_BITS,
                                             STD_DC_LUMINANCE_VALUES)

# Marker codes (second byte after 0xFF)
SOI, EOI, SOS, DQT, DHT, DRI, SOF0 = 0xD8, 0xD9, 0xDA, 0xDB, 0xC4, 0xDD, 0xC0
UNSUPPORTED_MARKERS = {
    0xC1: 'SOF1 (extended sequential)', 0xC2: 'SOF2 (progressive)', 0xC3: 'SOF3 (lossless)',
    0xC5: 'SOF5 (hierarchical)', 0xC6: 'SOF6 (hierarchical progressive)', 0xC7: 'SOF7 (hierarchical lossless)',
    0xC9: 'SOF9 (arithmetic coding)', 0xCA: 'SOF10 (arithmetic progressive)', 0xCB: 'SOF11 (arithmetic lossless)',
    0xCC: 'DAC (arithmetic coding conditioning)', 0xCD: 'SOF13 (arithmetic hierarchical)',
    0xCE: 'SOF14 (arithmetic hierarchical progressive)', 0xCF: 'SOF15 (arithmetic hierarchical lossless)',
    0xDC: 'DNL', 0xDE: 'DHP', 0xDF: 'EXP',
}
MAX_DC_DIFF = 2047


def huffman_codes(bits, values) -> Dict[int, Tuple[int, int]]:
    """
    Builds the canonical Huffman code of a DHT segment.

    Args:
        bits (sequence of int): Number of codes of each length 1..16.
        values (sequence of int): Symbols in code order.

    Returns:
        Dict[int, Tuple[int, int]]: symbol -> (code, length).
    """
    codes = {}
    code = 0
    k = 0
    for length, count in enumerate(bits, start=1):
        for _ in range(count):
            codes[values[k]] = (code, length)
            code += 1
            k += 1
        code <<= 1
    return codes


def magnitude_category(value: int) -> int:
    return int(abs(value)).bit_length()


class _BitWriter:
    """Accumulates bits MSB first and applies 0xFF byte stuffing."""

    def __init__(self) -> None:
        self.out = bytearray()
        self.accumulator = 0
        self.count = 0

    def write(self, code: int, length: int) -> None:
        for shift in range(length - 1, -1, -1):
            self.accumulator = (self.accumulator << 1) | ((code >> shift) & 1)
            self.count += 1
            if self.count == 8:
                self._emit()

    def _emit(self) -> None:
        self.out.append(self.accumulator)
        if self.accumulator == 0xFF:
            self.out.append(0x00)
        self.accumulator = 0
        self.count = 0

    def flush(self) -> bytes:
        # Pad the last byte with 1-bits
        if self.count:
            self.write((1 << (8 - self.count)) - 1, 8 - self.count)
        return bytes(self.out)


def _segment(marker: int, payload: bytes) -> bytes:
    return struct.pack('>BBH', 0xFF, marker, len(payload) + 2) + payload


def _additional_bits(value: int, size: int) -> int:
    return value if value >= 0 else value + (1 << size) - 1


def jpeg_bytes(coeffs: JpegCoeffs) -> bytes:
    """
    Encodes hard-quantized coefficients as a baseline grayscale JFIF stream.

    Args:
        coeffs (JpegCoeffs): Integral coefficients.

    Returns:
        bytes: The JPEG stream.

    Raises:
        UnsupportedJpegException: If a coefficient exceeds the baseline range.
        JpegParseException: If the coefficients are not integral.
    """
    if not coeffs.is_integral:
        raise JpegParseException("only integral (hard-quantized) coefficients can be encoded")

    steps = coeffs.quant.steps.reshape(-1)[ZIGZAG]
    precision = 0 if steps.max() <= 255 else 1
    dqt = bytes([(precision << 4) | 0]) + (steps.astype('>u1' if precision == 0 else '>u2').tobytes())

    sof = struct.pack('>BHHB', 8, coeffs.height, coeffs.width, 1) + bytes([1, 0x11, 0])
    dht = (bytes([0x00]) + bytes(STD_DC_LUMINANCE_BITS) + bytes(STD_DC_LUMINANCE_VALUES)
           + bytes([0x10]) + bytes(STD_AC_LUMINANCE_BITS) + bytes(STD_AC_LUMINANCE_VALUES))
    sos = bytes([1, 1, 0x00, 0, 63, 0])
    app0 = b'JFIF\x00' + struct.pack('>BBBHHBB', 1, 1, 0, 1, 1, 0, 0)

    dc_codes = huffman_codes(STD_DC_LUMINANCE_BITS, STD_DC_LUMINANCE_VALUES)
    ac_codes = huffman_codes(STD_AC_LUMINANCE_BITS, STD_AC_LUMINANCE_VALUES)
    writer = _BitWriter()
    predictor = 0
    for block in coeffs.coeffs.reshape(-1, 64):
        scanned = block[ZIGZAG]
        diff = int(scanned[0]) - predictor
        predictor = int(scanned[0])
        if abs(diff) > MAX_DC_DIFF:
            raise UnsupportedJpegException(f"DC difference {diff} beyond baseline range")
        size = magnitude_category(diff)
        writer.write(*dc_codes[size])
        if size:
            writer.write(_additional_bits(diff, size), size)

        run = 0
        for value in scanned[1:]:
            value = int(value)
            if value == 0:
                run += 1
                continue
            if abs(value) > BASELINE_AC_LIMIT:
                raise UnsupportedJpegException(f"AC coefficient {value} beyond baseline range")
            while run > 15:
                writer.write(*ac_codes[0xF0])
                run -= 16
            size = magnitude_category(value)
            writer.write(*ac_codes[(run << 4) | size])
            writer.write(_additional_bits(value, size), size)
            run = 0
        if run:
            writer.write(*ac_codes[0x00])

    return (bytes([0xFF, SOI]) + _segment(0xE0, app0) + _segment(DQT, dqt) + _segment(SOF0, sof)
            + _segment(DHT, dht) + _segment(SOS, sos) + writer.flush() + bytes([0xFF, EOI]))


class _ByteReader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > len(self.data):
            raise JpegParseException(f"stream truncated while reading {what}")
        chunk = self.data[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack('>H', self.take(2, what))[0]


class _BitReader:
    def __init__(self, data: bytes) -> None:
        self.bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8)) if data else np.zeros(0, dtype=np.uint8)
        self.pos = 0

    def read(self, count: int) -> int:
        if self.pos + count > len(self.bits):
            raise JpegParseException("entropy-coded data truncated")
        value = 0
        for bit in self.bits[self.pos:self.pos + count]:
            value = (value << 1) | int(bit)
        self.pos += count
        return value

    def decode(self, table: Dict[Tuple[int, int], int]) -> int:
        code = 0
        for length in range(1, 17):
            code = (code << 1) | self.read(1)
            symbol = table.get((length, code))
            if symbol is not None:
                return symbol
        raise JpegParseException("invalid Huffman code in entropy-coded data")


def _extend(bits: int, size: int) -> int:
    return bits if bits >= (1 << (size - 1)) else bits - (1 << size) + 1


def _entropy_segment(reader: _ByteReader) -> bytes:
    """Reads entropy-coded bytes up to the next marker, removing byte stuffing."""
    data = reader.data
    out = bytearray()
    pos = reader.pos
    while True:
        if pos >= len(data):
            raise JpegParseException("stream truncated inside entropy-coded data")
        byte = data[pos]
        if byte != 0xFF:
            out.append(byte)
            pos += 1
            continue
        if pos + 1 >= len(data):
            raise JpegParseException("stream truncated inside entropy-coded data")
        following = data[pos + 1]
        if following == 0x00:
            out.append(0xFF)
            pos += 2
        elif 0xD0 <= following <= 0xD7:
            raise UnsupportedJpegException(f"RST{following - 0xD0} (restart markers)")
        else:
            reader.pos = pos
            return bytes(out)


def parse_jpeg_grayscale(data: bytes) -> JpegCoeffs:
    """
    Parses a baseline sequential grayscale JFIF stream into quantized coefficients.

    Args:
        data (bytes): The JPEG stream.

    Returns:
        JpegCoeffs: Exact quantized coefficients and the quantization table of the component.

    Raises:
        UnsupportedJpegException: For progressive, arithmetic-coded, multi-component or restart streams.
        JpegParseException: For truncated or malformed streams.
    """
    reader = _ByteReader(data)
    if reader.take(2, "SOI") != bytes([0xFF, SOI]):
        raise JpegParseException("missing SOI marker")

    quant_tables: Dict[int, np.ndarray] = {}
    huffman: Dict[Tuple[int, int], Dict[Tuple[int, int], int]] = {}
    frame = None
    coeffs = None

    while True:
        if reader.u8("marker") != 0xFF:
            raise JpegParseException(f"expected a marker at offset {reader.pos - 1}")
        marker = reader.u8("marker")
        while marker == 0xFF:
            marker = reader.u8("marker")

        if marker == EOI:
            break
        if marker in UNSUPPORTED_MARKERS:
            raise UnsupportedJpegException(UNSUPPORTED_MARKERS[marker])
        if 0xD0 <= marker <= 0xD7:
            raise UnsupportedJpegException(f"RST{marker - 0xD0} (restart markers)")

        length = reader.u16("segment length")
        if length < 2:
            raise JpegParseException(f"invalid segment length {length}")
        segment = _ByteReader(reader.take(length - 2, f"segment 0x{marker:02X}"))

        if marker == DQT:
            while segment.pos < len(segment.data):
                pq_tq = segment.u8("DQT")
                precision, table_id = pq_tq >> 4, pq_tq & 0x0F
                width = 1 if precision == 0 else 2
                raw = segment.take(64 * width, "DQT table")
                scanned = np.frombuffer(raw, dtype='>u1' if width == 1 else '>u2').astype(np.int64)
                natural = np.zeros(64, dtype=np.int64)
                natural[ZIGZAG] = scanned
                quant_tables[table_id] = natural.reshape(8, 8)
        elif marker == DHT:
            while segment.pos < len(segment.data):
                tc_th = segment.u8("DHT")
                bits = list(segment.take(16, "DHT counts"))
                values = list(segment.take(sum(bits), "DHT values"))
                codes = huffman_codes(bits, values)
                huffman[(tc_th >> 4, tc_th & 0x0F)] = {(length, code): symbol for symbol, (code, length) in codes.items()}
        elif marker == SOF0:
            precision = segment.u8("SOF0")
            height, width = segment.u16("SOF0 height"), segment.u16("SOF0 width")
            components = segment.u8("SOF0 components")
            if components != 1:
                raise UnsupportedJpegException(f"SOF0 with {components} components (only grayscale)")
            if precision != 8:
                raise UnsupportedJpegException(f"SOF0 with {precision}-bit samples")
            component_id, _, table_id = segment.u8("SOF0"), segment.u8("SOF0"), segment.u8("SOF0")
            if height == 0:
                raise UnsupportedJpegException("DNL (height defined after the scan)")
            frame = (height, width, component_id, table_id)
        elif marker == DRI:
            if segment.u16("DRI") != 0:
                raise UnsupportedJpegException("DRI (restart markers)")
        elif marker == SOS:
            if frame is None:
                raise JpegParseException("SOS before SOF0")
            count = segment.u8("SOS")
            if count != 1:
                raise UnsupportedJpegException(f"SOS with {count} components")
            segment.u8("SOS component")
            tables = segment.u8("SOS tables")
            start, end, approx = segment.u8("SOS"), segment.u8("SOS"), segment.u8("SOS")
            if (start, end, approx) != (0, 63, 0):
                raise UnsupportedJpegException("SOS spectral selection (progressive)")
            coeffs = _decode_scan(_entropy_segment(reader), frame, huffman, tables >> 4, tables & 0x0F)
        # APPn, COM and anything else carrying a length are skipped

    if frame is None or coeffs is None:
        raise JpegParseException("stream ended without a frame and a scan")
    table_id = frame[3]
    if table_id not in quant_tables:
        raise JpegParseException(f"quantization table {table_id} not defined")
    if frame[0] % 8 or frame[1] % 8:
        logger.warning(f"JPEG of size {frame[0]}x{frame[1]} is padded to whole 8x8 blocks.")
    return JpegCoeffs(coeffs, QuantTable(quant_tables[table_id]))


def _decode_scan(entropy: bytes, frame, huffman, dc_id: int, ac_id: int) -> np.ndarray:
    height, width = frame[0], frame[1]
    if (0, dc_id) not in huffman or (1, ac_id) not in huffman:
        raise JpegParseException("scan references an undefined Huffman table")
    dc_table, ac_table = huffman[(0, dc_id)], huffman[(1, ac_id)]
    blocks_h, blocks_w = math.ceil(height / 8), math.ceil(width / 8)

    bits = _BitReader(entropy)
    scanned = np.zeros((blocks_h * blocks_w, 64), dtype=np.int32)
    predictor = 0
    for index in range(blocks_h * blocks_w):
        size = bits.decode(dc_table)
        diff = _extend(bits.read(size), size) if size else 0
        predictor += diff
        scanned[index, 0] = predictor
        k = 1
        while k < 64:
            symbol = bits.decode(ac_table)
            run, size = symbol >> 4, symbol & 0x0F
            if size == 0:
                if run == 15:
                    k += 16
                    continue
                break
            k += run
            if k > 63:
                raise JpegParseException("AC run past the end of a block")
            scanned[index, k] = _extend(bits.read(size), size)
            k += 1

    natural = np.zeros_like(scanned)
    natural[:, ZIGZAG] = scanned
    return natural.reshape(blocks_h, blocks_w, 8, 8)


def write_jpeg(coeffs: JpegCoeffs, path: str) -> str:
    """
    Writes coefficients as a baseline grayscale JPEG file.

    Returns:
        str: The written path.

    Raises:
        ImageIOException: If the file cannot be written.
    """
    payload = jpeg_bytes(coeffs)
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'wb') as file_handler:
            file_handler.write(payload)
    except OSError:
        msg = f"Failed to write JPEG '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"JPEG '{path}'")
    return path


def read_jpeg(path: str) -> JpegCoeffs:
    """
    Reads a baseline grayscale JPEG file.

    Raises:
        ImageIOException: If the file cannot be opened.
        JpegParseException, UnsupportedJpegException: As parse_jpeg_grayscale.
    """
    try:
        with open(path, 'rb') as file_handler:
            data = file_handler.read()
    except OSError:
        msg = f"Failed to read JPEG '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"JPEG '{path}'")
    return parse_jpeg_grayscale(data)


def read_jpeg_files(paths: List[str]) -> List[JpegCoeffs]:
    return [read_jpeg(path) for path in paths]
