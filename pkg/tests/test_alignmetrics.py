import numpy as np
import pytest

from tada2go.toolkit.alignmetrics.discrepancy import (chordal_distance, mmd,
                                                      subspace_basis)
from tada2go.toolkit.alignmetrics.statistics import (covariance,
                                                     covariance_frobenius_distance,
                                                     frobenius_distance,
                                                     second_order)
from tada2go.toolkit.alignmetrics.transport import (exact_ot_small,
                                                    sinkhorn_divergence)
from tada2go.toolkit.exceptions.exceptions import (DimensionMismatchException,
                                                   InstanceTooLargeException,
                                                   InsufficientSamplesException,
                                                   RankDeficiencyException)


@pytest.fixture
def cloud():
    return np.random.default_rng(3).normal(0.0, 5.0, size=(6, 2))


def test_exact_transport_of_a_translation(cloud):
    assert exact_ot_small(cloud, cloud + np.array([3.0, 0.0])) == pytest.approx(9.0)


def test_exact_transport_with_unequal_sizes():
    x = np.array([[0.0], [2.0]])
    y = np.array([[1.0], [1.0], [1.0]])
    assert exact_ot_small(x, y) == pytest.approx(1.0)


def test_exact_transport_refuses_large_instances():
    with pytest.raises(InstanceTooLargeException):
        exact_ot_small(np.zeros((65, 1)), np.zeros((65, 1)))


def test_sinkhorn_approaches_exact_transport(cloud):
    shifted = cloud + np.array([3.0, 0.0])
    result = sinkhorn_divergence(cloud, shifted, epsilon=0.05, max_iter=2000)
    assert result.value == pytest.approx(exact_ot_small(cloud, shifted), abs=0.5)


def test_sinkhorn_of_identical_samples_is_zero(cloud):
    result = sinkhorn_divergence(cloud, cloud)
    assert result.value == pytest.approx(0.0, abs=1e-6)
    assert result.value >= 0.0


def test_sinkhorn_grows_with_distance(cloud):
    near = sinkhorn_divergence(cloud, cloud + 1.0, epsilon=1.0).value
    far = sinkhorn_divergence(cloud, cloud + 4.0, epsilon=1.0).value
    assert far > near > 0.0


def test_sinkhorn_dimension_mismatch():
    with pytest.raises(DimensionMismatchException):
        sinkhorn_divergence(np.zeros((3, 2)), np.zeros((3, 3)))


def test_mmd_separates_shifted_samples():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 3))
    same = rng.normal(size=(40, 3))
    shifted = rng.normal(size=(40, 3)) + 3.0
    assert mmd(x, shifted).value > mmd(x, same).value
    assert mmd(x, same, bandwidth=1.0).bandwidth == 1.0
    assert mmd(x, shifted, biased=True).raw > 0.0


def test_biased_mmd_of_two_points():
    result = mmd([[0.0, 0.0]], [[3.0, 4.0]], bandwidth=5.0, biased=True)
    assert result.value == pytest.approx(2.0 - 2.0 * np.exp(-0.5))


def test_mmd_needs_two_samples_unbiased():
    with pytest.raises(InsufficientSamplesException):
        mmd(np.zeros((1, 2)), np.zeros((5, 2)))


def test_chordal_distance_extremes():
    rng = np.random.default_rng(1)
    plane_a = np.zeros((30, 4))
    plane_a[:, :2] = rng.normal(size=(30, 2))
    plane_b = np.zeros((30, 4))
    plane_b[:, 2:] = rng.normal(size=(30, 2))
    assert chordal_distance(plane_a, plane_a, 2) == pytest.approx(0.0, abs=1e-7)
    assert chordal_distance(plane_a, plane_b, 2) == pytest.approx(1.0)


def test_subspace_basis_rank_check():
    flat = np.zeros((10, 3))
    flat[:, 0] = np.arange(10)
    assert subspace_basis(flat, 1).shape == (3, 1)
    with pytest.raises(RankDeficiencyException):
        subspace_basis(flat, 2)


def test_second_order_statistics():
    rng = np.random.default_rng(2)
    samples = rng.normal(size=(100, 3))
    samples[:, 2] = 1.0
    stats = second_order(samples)
    assert np.allclose(stats.cov, np.cov(samples, rowvar=False))
    assert np.allclose(np.diag(stats.corr), 1.0)
    assert np.allclose(stats.corr[2, :2], 0.0)
    with pytest.raises(InsufficientSamplesException):
        second_order(samples[:1])


def test_gram_covariance_distance_matches_direct_form():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(12, 30))
    y = rng.normal(size=(9, 30)) * 2.0
    direct = frobenius_distance(covariance(x), covariance(y))
    assert covariance_frobenius_distance(x, y) == pytest.approx(direct, rel=1e-9)
    with pytest.raises(DimensionMismatchException):
        frobenius_distance(np.zeros((2, 2)), np.zeros((3, 3)))
