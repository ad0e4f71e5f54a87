import numpy as np
import pytest
from scipy.linalg import fractional_matrix_power
from scipy.stats import ortho_group

from tada2go.toolkit.baselines.adaptation import (coral_transform, pca_basis,
                                                  subspace_align)
from tada2go.toolkit.baselines.catalog import (SourceCatalog, TargetBundle,
                                               build_all_mixture,
                                               build_catalog, parallel_map)
from tada2go.toolkit.baselines.selection import (fit_router,
                                                 multiclassifier_route,
                                                 routed_predict,
                                                 select_closest_source)
from tada2go.toolkit.exceptions.exceptions import (ConfigurationException,
                                                   DegenerateLabelsException,
                                                   EmptySelectionException,
                                                   RankDeficiencyException,
                                                   SchemaMismatchException)
from tada2go.toolkit.imagery.pipeline import (develop, identity_pipeline,
                                              sharpen_pipeline)
from tada2go.toolkit.imagery.synthesis import generate_synthetic_raw
from tada2go.toolkit.jpegcodec.compression import compress_hard
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.stego.embedding import EmbeddingConfig


@pytest.fixture(scope='module')
def catalog():
    qf85 = QuantTable.from_quality(85)
    pool = generate_synthetic_raw(count=4, size=64, noise_alpha=0.5, noise_beta=4.0, smoothness=1.5, seed=0)
    return build_catalog(pool, [identity_pipeline(qf85), sharpen_pipeline(qf85)], qf85,
                         EmbeddingConfig('UERD', 0.4), schema_id='dctr-lite')


def test_parallel_map_keeps_order():
    items = list(range(10))
    assert parallel_map(lambda item: item * item, items, workers=4) == [item * item for item in items]


def test_coral_matches_dense_matrix_powers():
    rng = np.random.default_rng(0)
    source = rng.normal(size=(50, 4)) @ rng.normal(size=(4, 4))
    target = rng.normal(size=(60, 4)) * np.array([1.0, 2.0, 0.5, 3.0])
    eye = np.eye(4)
    expected = (source @ fractional_matrix_power(np.cov(source, rowvar=False) + eye, -0.5)
                @ fractional_matrix_power(np.cov(target, rowvar=False) + eye, 0.5))
    assert np.allclose(coral_transform(source, target), np.real(expected), atol=1e-8)


def test_coral_low_rank_features():
    rng = np.random.default_rng(1)
    source = rng.normal(size=(5, 40))
    target = rng.normal(size=(6, 40))
    transformed = coral_transform(source, target, eta=0.5)
    assert transformed.shape == source.shape and np.all(np.isfinite(transformed))
    with pytest.raises(ConfigurationException):
        coral_transform(source, target, eta=0.0)


def test_subspace_alignment_is_the_best_linear_map():
    rng = np.random.default_rng(2)
    source = rng.normal(size=(40, 6)) * np.arange(1, 7)
    target = rng.normal(size=(30, 6)) * np.arange(6, 0, -1)
    aligned = subspace_align(source, target, 3)
    assert np.allclose(aligned.alignment, aligned.source_basis.T @ aligned.target_basis)
    assert aligned.source.shape == (40, 3) and aligned.target.shape == (30, 3)
    best = np.linalg.norm(aligned.source_basis @ aligned.alignment - aligned.target_basis)
    other = ortho_group.rvs(3, random_state=3)
    assert best <= np.linalg.norm(aligned.source_basis @ other - aligned.target_basis) + 1e-12
    assert np.allclose(aligned.project_source(source), aligned.source)


def test_subspace_alignment_of_a_domain_with_itself():
    features = np.random.default_rng(4).normal(size=(20, 5)) * np.arange(1, 6)
    aligned = subspace_align(features, features, 2)
    assert np.allclose(np.abs(aligned.alignment), np.eye(2), atol=1e-8)


def test_pca_basis_rank():
    flat = np.zeros((10, 4))
    flat[:, 0] = np.arange(10)
    assert pca_basis(flat, 1).shape == (4, 1)
    with pytest.raises(RankDeficiencyException):
        pca_basis(flat, 2)
    with pytest.raises(RankDeficiencyException):
        pca_basis(flat, 10)


def test_catalog_holds_one_source_per_pipeline(catalog):
    assert catalog.identifiers == ['identity', 'S']
    assert catalog.schema_id == 'dctr-lite'
    for entry in catalog:
        assert entry.labeled.count == 4
        assert entry.labeled.cover_features.shape == (4, 1280)
        assert entry.detector.schema_id == 'dctr-lite'
        assert entry.pipeline.quant_table.identifier == 'qf85'


def test_catalog_needs_pipelines():
    pool = generate_synthetic_raw(count=2, size=32, noise_alpha=0.5, noise_beta=4.0, smoothness=1.5, seed=0)
    with pytest.raises(EmptySelectionException):
        build_catalog(pool, [], QuantTable.from_quality(85))


def test_mixture_balances_sources(catalog):
    mixture = build_all_mixture(catalog, QuantTable.from_quality(85))
    assert mixture.count == 8
    assert mixture.stego_features.shape == (8, 1280)
    assert np.array_equal(mixture.cover_features[4:], catalog[1].labeled.cover_features)
    recompressed = build_all_mixture(catalog, QuantTable.from_quality(75))
    assert recompressed.covers[0].quant.identifier == 'qf75'


@pytest.mark.parametrize('metric', ['NSCD', 'cov-frobenius'])
def test_closest_source_of_its_own_covers(catalog, metric):
    target = TargetBundle(catalog[1].labeled.covers, 'sharpened')
    result = select_closest_source(catalog, target, metric)
    assert result.index == 1 and result.identifier == 'S'
    assert list(result.table['source']) == ['identity', 'S']
    assert result.table['value'][1] == pytest.approx(0.0, abs=1e-7)


def test_unknown_selection_metric(catalog):
    with pytest.raises(SchemaMismatchException):
        select_closest_source(catalog, TargetBundle(catalog[0].labeled.covers), 'KL')


def test_routing(catalog):
    target = TargetBundle(catalog[0].labeled.covers + catalog[1].labeled.covers)
    result = multiclassifier_route(catalog, target)
    assert result.assignments.shape == (8,)
    assert result.counts(len(catalog)).sum() == 8
    assert np.mean(result.assignments == np.repeat([0, 1], 4)) >= 0.9
    predictions = routed_predict(catalog, result.router, target.features('dctr-lite'))
    assert set(np.unique(predictions)) <= {0, 1}


def test_routing_recovers_the_pipeline_of_unseen_images():
    qf85 = QuantTable.from_quality(85)
    pipelines = [identity_pipeline(qf85), sharpen_pipeline(qf85)]
    pool = generate_synthetic_raw(count=12, size=64, noise_alpha=0.5, noise_beta=4.0, smoothness=1.5, seed=0)
    catalog = build_catalog(pool, pipelines, qf85, EmbeddingConfig('UERD', 0.4), schema_id='dctr-lite')
    unseen = generate_synthetic_raw(count=10, size=64, noise_alpha=0.5, noise_beta=4.0, smoothness=1.5, seed=3)
    images = [compress_hard(develop(raw, pipeline).block_aligned(), qf85) for pipeline in pipelines for raw in unseen]
    result = multiclassifier_route(catalog, TargetBundle(images))
    truth = np.repeat([0, 1], len(unseen))
    assert np.mean(result.assignments == truth) >= 0.9


def test_routing_needs_two_sources(catalog):
    with pytest.raises(DegenerateLabelsException):
        fit_router(SourceCatalog(catalog.entries[:1], catalog.embedding))


def test_target_bundle_limits(catalog):
    covers = catalog[0].labeled.covers
    with pytest.raises(EmptySelectionException):
        TargetBundle([])
    with pytest.raises(EmptySelectionException):
        TargetBundle(covers, max_count=2)
    bundle = TargetBundle(covers)
    assert len(bundle) == 4 and bundle.quant_table.identifier == 'qf85'
    assert bundle.features('dctr-lite') is bundle.features('dctr-lite')
