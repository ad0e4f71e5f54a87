import json

import numpy as np
import pytest

from tada2go.toolkit.exceptions.exceptions import (InvalidImageException,
                                                   InvalidPipelineException)
from tada2go.toolkit.imagery.image import GrayImage, RawPool, read_pgm, write_pgm
from tada2go.toolkit.imagery.pipeline import (PipelineConfig, PipelineOp, blur,
                                              convolve, default_catalog,
                                              develop, find_pipeline,
                                              identity_pipeline, load_catalog,
                                              save_catalog, sharpen_pipeline,
                                              unsharp_mask)
from tada2go.toolkit.imagery.synthesis import (crop_by_uniformity,
                                               generate_synthetic_raw)


def test_gray_image_rejects_bad_grids():
    with pytest.raises(InvalidImageException):
        GrayImage(np.zeros(5))
    with pytest.raises(InvalidImageException):
        GrayImage(np.array([[1.0, np.nan]]))


def test_block_aligned_drops_trailing_pixels():
    image = GrayImage(np.arange(20 * 27, dtype=float).reshape(20, 27))
    assert image.block_aligned().shape == (16, 24)
    with pytest.raises(InvalidImageException):
        GrayImage(np.zeros((7, 30))).block_aligned()


def test_raw_pool_requires_shared_dimensions():
    with pytest.raises(InvalidImageException):
        RawPool([GrayImage(np.zeros((8, 8))), GrayImage(np.zeros((16, 8)))])
    with pytest.raises(InvalidImageException):
        RawPool([])


def test_synthetic_pool_is_reproducible():
    first = generate_synthetic_raw(3, 32, 0.5, 4.0, 1.5, seed=11)
    second = generate_synthetic_raw(3, 32, 0.5, 4.0, 1.5, seed=11)
    other = generate_synthetic_raw(3, 32, 0.5, 4.0, 1.5, seed=12)
    assert all(a == b for a, b in zip(first, second))
    assert first[0] != other[0]
    assert first.shape == (32, 32)
    for image in first:
        assert image.pixels.min() >= 0.0 and image.pixels.max() <= 255.0


def test_flat_content_keeps_only_noise():
    pool = generate_synthetic_raw(1, 64, 0.0, 4.0, float('inf'), seed=0)
    assert abs(pool[0].pixels.std() - 2.0) < 0.2


def test_crop_by_uniformity_picks_flat_or_textured_region():
    pixels = np.full((32, 32), 128.0)
    rng = np.random.default_rng(0)
    pixels[16:, 16:] += rng.normal(0.0, 20.0, size=(16, 16))
    image = GrayImage(pixels)
    assert crop_by_uniformity(image, 16, 'most-uniform') == image.crop(0, 0, 16, 16)
    assert crop_by_uniformity(image, 16, 'most-textured') == image.crop(16, 16, 16, 16)
    with pytest.raises(InvalidImageException):
        crop_by_uniformity(image, 12)
    with pytest.raises(InvalidImageException):
        crop_by_uniformity(image, 40)


def test_identity_development_is_exact(raw_pool, qf85):
    assert develop(raw_pool[0], identity_pipeline(qf85)) == raw_pool[0]


def test_sharpen_keeps_flat_images_and_shrinks_margin(qf85):
    flat = GrayImage(np.full((20, 20), 100.0))
    developed = develop(flat, sharpen_pipeline(qf85))
    assert developed.shape == (18, 18)
    assert np.allclose(developed.pixels, 100.0)
    assert sharpen_pipeline(qf85, 0.5).identifier == '0.5S'


def test_development_clips_to_pixel_range(qf85):
    pixels = np.zeros((10, 10))
    pixels[5, 5] = 255.0
    developed = develop(GrayImage(pixels), sharpen_pipeline(qf85))
    assert developed.pixels.min() >= 0.0 and developed.pixels.max() <= 255.0


def test_unsharp_mask_threshold_keeps_small_details(qf85):
    pixels = np.full((16, 16), 100.0)
    pixels[8, 8] = 100.5
    pipeline = PipelineConfig('usm', [unsharp_mask(1.0, 2.0, threshold=5.0)], qf85)
    developed = develop(GrayImage(pixels), pipeline)
    assert np.allclose(developed.pixels, pixels[3:13, 3:13])


def test_invalid_operations_are_rejected(qf85):
    with pytest.raises(InvalidPipelineException):
        PipelineConfig('bad', [PipelineOp('median', {})], qf85)
    with pytest.raises(InvalidPipelineException):
        PipelineConfig('even', [convolve(np.ones((2, 2)))], qf85)
    with pytest.raises(InvalidPipelineException):
        develop(GrayImage(np.zeros((4, 4))), PipelineConfig('big', [blur(2.0)], qf85))


def test_catalog_file_round_trip(tmp_path, qf85):
    path = save_catalog(default_catalog(qf85), str(tmp_path / 'catalog.json'))
    loaded = load_catalog(path)
    assert [p.identifier for p in loaded] == [p.identifier for p in default_catalog(qf85)]
    assert find_pipeline(loaded, 'S').ops[0].params['kernel'].tolist() == sharpen_pipeline(qf85).ops[0].params['kernel'].tolist()
    with pytest.raises(InvalidPipelineException):
        find_pipeline(loaded, 'missing')


def test_catalog_rejects_duplicate_identifiers(tmp_path, qf85):
    entry = identity_pipeline(qf85).to_dict()
    path = tmp_path / 'dup.json'
    path.write_text(json.dumps({'pipelines': [entry, entry]}))
    with pytest.raises(InvalidPipelineException):
        load_catalog(str(path))


@pytest.mark.parametrize('bit_depth, tolerance', [(8, 0.5), (16, 0.01)])
def test_pgm_round_trip(tmp_path, raw_pool, bit_depth, tolerance):
    path = write_pgm(raw_pool[0], str(tmp_path / 'raw.pgm'), bit_depth)
    restored = read_pgm(path)
    assert restored.shape == raw_pool[0].shape
    assert np.max(np.abs(restored.pixels - raw_pool[0].pixels)) <= tolerance
