import numpy as np
import pytest

from tada2go.toolkit.exceptions.exceptions import (EmptySelectionException,
                                                   InsufficientSamplesException,
                                                   InvalidPatchGeometryException,
                                                   InvalidPipelineException)
from tada2go.toolkit.imagery.image import GrayImage
from tada2go.toolkit.residual.filters import (KB_FILTER, L4_FILTER,
                                              apply_filter, get_filter)
from tada2go.toolkit.residual.patches import (PatchConfig, ResidualPatchSet,
                                              build_patch_sets,
                                              extract_patches,
                                              patch_grid_start,
                                              select_by_variance)


def test_filters_are_zero_sum():
    for residual_filter in (KB_FILTER, L4_FILTER):
        assert residual_filter.kernel.sum() == pytest.approx(0.0)
        assert residual_filter.margin == 1


def test_unknown_filter():
    with pytest.raises(InvalidPipelineException):
        get_filter('SRM')


def test_residual_of_a_ramp_vanishes():
    rows, cols = np.mgrid[0:20, 0:24]
    ramp = GrayImage(3.0 * rows + 2.0 * cols + 10.0)
    for residual_filter in (KB_FILTER, L4_FILTER):
        residual = apply_filter(ramp, residual_filter)
        assert residual.shape == (18, 22)
        assert np.allclose(residual.pixels, 0.0)


def test_filter_rejects_tiny_images():
    with pytest.raises(InvalidPatchGeometryException):
        apply_filter(np.zeros((2, 2)), KB_FILTER)


def test_patch_tiling_and_order():
    residual = np.arange(32 * 32, dtype=float).reshape(32, 32)
    patch_set = extract_patches(residual, 8, 16)
    assert patch_set.count == 8 and patch_set.dim == 128
    assert np.array_equal(patch_set.patches[0], residual[0:8, 0:16].ravel())
    assert np.array_equal(patch_set.patches[1], residual[0:8, 16:32].ravel())
    assert np.array_equal(patch_set.patches[2], residual[8:16, 0:16].ravel())


def test_patch_grid_compensates_filter_margin():
    assert patch_grid_start(0, 1) == 7
    assert patch_grid_start(0, 0) == 0
    assert patch_grid_start(3, 1) == 2


def test_patch_geometry_errors():
    with pytest.raises(InvalidPatchGeometryException):
        extract_patches(np.zeros((32, 32)), 8, 12)
    with pytest.raises(InvalidPatchGeometryException):
        extract_patches(np.zeros((8, 8)), 8, 16)


def test_variance_selection_is_idempotent_and_bounded():
    rng = np.random.default_rng(0)
    patches = rng.normal(size=(50, 16)) * rng.uniform(0.5, 3.0, size=(50, 1))
    patch_set = ResidualPatchSet(patches, 4 * 2, 2, 'KB')
    once = select_by_variance(patch_set, 0.3, 0.6)
    twice = select_by_variance(once, 0.3, 0.6)
    assert np.array_equal(once.selected, twice.selected)
    assert 0 < once.selected_count < patch_set.count
    assert select_by_variance(patch_set, 0.0, 1.0).selected_count == patch_set.count


def test_variance_selection_errors():
    patch_set = ResidualPatchSet(np.ones((1, 128)), 8, 16, 'KB')
    with pytest.raises(InsufficientSamplesException):
        select_by_variance(patch_set)
    with pytest.raises(EmptySelectionException):
        select_by_variance(ResidualPatchSet(np.ones((4, 128)), 8, 16, 'KB'), 0.6, 0.3)


def test_build_patch_sets_per_filter(raw_pool):
    sets = build_patch_sets(raw_pool.stack(), PatchConfig(select=False))
    assert sorted(sets) == ['KB', 'L4']
    # 64x64 images lose one pixel per side; the aligned grid starts at 7: 6 rows x 3 columns of 8x16 patches
    assert sets['KB'].count == len(raw_pool) * 6 * 3
    selected = build_patch_sets(raw_pool.stack(), PatchConfig())
    assert selected['L4'].selected_count < selected['L4'].count


def test_patch_set_frame(raw_pool):
    patch_set = build_patch_sets(raw_pool.stack(), PatchConfig(filters=('KB',)))['KB']
    frame = patch_set.to_frame()
    assert len(frame) == patch_set.count
