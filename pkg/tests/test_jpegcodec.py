import io

import numpy as np
import pytest
from PIL import Image

from tada2go.toolkit.exceptions.exceptions import (InvalidBlockGeometryException,
                                                   JpegParseException,
                                                   UnsupportedJpegException)
from tada2go.toolkit.imagery.image import GrayImage
from tada2go.toolkit.jpegcodec.compression import (JpegCoeffs, compress_hard,
                                                   compress_soft, count_nzac,
                                                   decompress, decompress_8bit,
                                                   soft_round)
from tada2go.toolkit.jpegcodec.container import (container_bytes,
                                                 parse_container,
                                                 read_container,
                                                 write_container)
from tada2go.toolkit.jpegcodec.dct import dct_block, inverse_dct
from tada2go.toolkit.jpegcodec.jfif import (jpeg_bytes, parse_jpeg_grayscale,
                                            read_jpeg, write_jpeg)
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.utils.constants import ANNEX_K_LUMINANCE


def test_quality_50_is_the_annex_k_table():
    assert np.array_equal(QuantTable.from_quality(50).steps, ANNEX_K_LUMINANCE)
    assert np.all(QuantTable.from_quality(100).steps == 1)
    assert QuantTable.from_config('qf85') == QuantTable.from_quality(85)
    assert QuantTable.from_quality(85).identifier == 'qf85'


def test_quant_table_validation():
    with pytest.raises(InvalidBlockGeometryException):
        QuantTable(np.ones((4, 4)))
    with pytest.raises(InvalidBlockGeometryException):
        QuantTable(np.zeros((8, 8)))
    with pytest.raises(InvalidBlockGeometryException):
        QuantTable.from_quality(0)


def test_custom_table_identifier_and_quality_estimate():
    custom = QuantTable(QuantTable.from_quality(75).steps)
    assert custom.identifier.startswith('custom-')
    assert abs(custom.estimated_quality() - 75.0) < 3.0


def test_dct_of_flat_block_is_dc_only():
    coeffs = dct_block(np.full((8, 8), 138.0))
    assert coeffs[0, 0] == pytest.approx(80.0)
    assert np.allclose(coeffs.ravel()[1:], 0.0)


def test_inverse_dct_restores_block():
    block = np.random.default_rng(1).uniform(0, 255, size=(8, 8))
    assert np.allclose(inverse_dct(dct_block(block)), block)


def test_compression_needs_block_multiples(qf85):
    with pytest.raises(InvalidBlockGeometryException):
        compress_hard(GrayImage(np.zeros((12, 16))), qf85)


def test_quality_100_compression_error_is_small(raw_pool):
    q100 = QuantTable.from_quality(100)
    restored = decompress(compress_hard(raw_pool[0], q100))
    assert np.max(np.abs(restored.pixels - raw_pool[0].pixels)) <= 4.0


def test_soft_rounding_stays_close_to_hard(raw_pool, qf85):
    hard = compress_hard(raw_pool[0], qf85)
    soft = compress_soft(raw_pool[0], qf85)
    assert hard.is_integral and not soft.is_integral
    assert np.max(np.abs(soft.coeffs - hard.coeffs)) <= 0.125 + 1e-12
    assert np.array_equal(soft_round(np.array([-2.0, 0.0, 3.0])), np.array([-2.0, 0.0, 3.0]))
    assert soft_round(np.array([0.5]))[0] == pytest.approx(0.875)
    assert soft_round(np.array([-0.5]))[0] == pytest.approx(-0.875)


def test_count_nzac_excludes_dc(qf85):
    coeffs = np.zeros((1, 2, 8, 8), dtype=np.int32)
    coeffs[0, 0, 0, 0] = 5
    coeffs[0, 1, 0, 0] = -3
    coeffs[0, 1, 2, 3] = 1
    coeffs[0, 0, 7, 7] = -1
    assert count_nzac(JpegCoeffs(coeffs, qf85)) == 2


def test_container_round_trip(tmp_path, covers):
    path = write_container(covers[0], str(tmp_path / 'cover.tadc'))
    assert read_container(path) == covers[0]


def test_container_rejects_soft_coefficients_and_bad_magic(raw_pool, qf85):
    with pytest.raises(JpegParseException):
        container_bytes(compress_soft(raw_pool[0], qf85))
    with pytest.raises(JpegParseException):
        parse_container(b'XXXX' + bytes(200))


def test_jpeg_round_trip_is_exact(tmp_path, covers):
    path = write_jpeg(covers[1], str(tmp_path / 'cover.jpg'))
    parsed = read_jpeg(path)
    assert parsed == covers[1]
    assert abs(parsed.quant.estimated_quality() - 85.0) < 3.0


def test_written_jpeg_decodes_like_pillow(covers):
    with Image.open(io.BytesIO(jpeg_bytes(covers[0]))) as img:
        assert img.mode == 'L'
        decoded = np.asarray(img, dtype=np.float64)
    assert decoded.shape == (covers[0].height, covers[0].width)
    assert np.max(np.abs(decoded - decompress_8bit(covers[0]).pixels)) <= 2.0


def test_reader_accepts_pillow_baseline_jpeg(raw_pool):
    buffer = io.BytesIO()
    Image.fromarray(np.round(raw_pool[0].pixels).astype(np.uint8), mode='L').save(buffer, format='JPEG', quality=90)
    coeffs = parse_jpeg_grayscale(buffer.getvalue())
    assert (coeffs.height, coeffs.width) == raw_pool[0].shape
    assert np.mean(np.abs(decompress(coeffs).pixels - raw_pool[0].pixels)) < 4.0


def test_reader_rejects_progressive_streams(raw_pool):
    buffer = io.BytesIO()
    Image.fromarray(np.round(raw_pool[0].pixels).astype(np.uint8), mode='L').save(
        buffer, format='JPEG', quality=90, progressive=True)
    with pytest.raises(UnsupportedJpegException):
        parse_jpeg_grayscale(buffer.getvalue())


def test_reader_rejects_truncated_streams(covers):
    with pytest.raises(JpegParseException):
        parse_jpeg_grayscale(jpeg_bytes(covers[0])[:40])
    with pytest.raises(JpegParseException):
        parse_jpeg_grayscale(b'not a jpeg')
