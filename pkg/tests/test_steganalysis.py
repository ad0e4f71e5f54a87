import numpy as np
import pytest

from tada2go.toolkit.exceptions.exceptions import (DegenerateLabelsException,
                                                   InsufficientSamplesException,
                                                   InvalidBlockGeometryException,
                                                   SchemaMismatchException)
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs
from tada2go.toolkit.steganalysis.detector import (Detector,
                                                   balanced_accuracy, evaluate,
                                                   train_detector)
from tada2go.toolkit.steganalysis.features import (FeatureVector,
                                                   dctr_features,
                                                   extract_features,
                                                   feature_matrix, get_schema,
                                                   read_feature_csv,
                                                   residual_step,
                                                   write_feature_csv)


def test_schema_dimensions():
    assert get_schema('dctr').dimension == 8000
    assert get_schema('dctr-lite').dimension == 1280
    with pytest.raises(SchemaMismatchException):
        get_schema('srm')


def test_residual_step_follows_quality():
    assert residual_step(50) == pytest.approx(8.0)
    assert residual_step(75) == pytest.approx(4.0)
    assert residual_step(100) == pytest.approx(0.5)


@pytest.mark.parametrize('schema_id', ['dctr', 'dctr-lite'])
def test_mid_gray_image_gives_one_hot_histograms(qf85, schema_id):
    flat = JpegCoeffs(np.zeros((2, 2, 8, 8), dtype=np.int32), qf85)
    vector = dctr_features(flat, schema_id)
    schema = get_schema(schema_id)
    histograms = vector.values.reshape(64, schema.phase_count, schema.threshold + 1)
    assert vector.schema_id == schema_id
    assert np.allclose(histograms[..., 0], 1.0)
    assert np.allclose(histograms[..., 1:], 0.0)


def test_features_are_normalized_histograms(covers):
    vector = dctr_features(covers[0])
    schema = get_schema('dctr')
    histograms = vector.values.reshape(64, schema.phase_count, schema.threshold + 1)
    assert np.all(np.isfinite(vector.values))
    assert np.allclose(histograms.sum(axis=-1), 1.0)


def test_features_need_every_grid_phase(qf85):
    with pytest.raises(InvalidBlockGeometryException):
        dctr_features(JpegCoeffs(np.zeros((1, 4, 8, 8), dtype=np.int32), qf85))


def test_feature_matrix_checks_schemas():
    vectors = [FeatureVector(np.zeros(3), 'dctr'), FeatureVector(np.ones(3), 'dctr-lite')]
    with pytest.raises(SchemaMismatchException):
        feature_matrix(vectors)
    matrix, schema_id = feature_matrix(vectors[:1])
    assert matrix.shape == (1, 3) and schema_id == 'dctr'


def test_feature_csv_round_trip(tmp_path, covers):
    matrix = extract_features(covers, 'dctr-lite')
    path = write_feature_csv(matrix, 'dctr-lite', str(tmp_path / 'features.csv'), labels=[0] * len(covers))
    values, schema_id, labels = read_feature_csv(path)
    assert schema_id == 'dctr-lite'
    assert labels.tolist() == [0] * len(covers)
    assert np.allclose(values, matrix, rtol=1e-8)


def test_detector_separates_separable_classes(separable_features):
    covers, stegos = separable_features
    detector = train_detector(covers, stegos)
    assert detector.converged
    assert detector.reg == pytest.approx(1.0 / 80)
    assert evaluate(detector, covers, stegos) == 1.0
    probabilities = detector.predict_proba(stegos)
    assert np.all((probabilities >= 0.5) & (probabilities <= 1.0))


def test_flipped_labels_flip_the_decisions(separable_features):
    covers, stegos = separable_features
    flipped = train_detector(stegos, covers)
    assert evaluate(flipped, covers, stegos) == 0.0


def test_regularization_shrinks_the_weights(separable_features):
    covers, stegos = separable_features
    loose = train_detector(covers, stegos, reg=1e-3)
    tight = train_detector(covers, stegos, reg=100.0)
    assert np.linalg.norm(tight.weights) < np.linalg.norm(loose.weights)


def test_constant_feature_is_harmless(separable_features):
    covers, stegos = separable_features
    covers, stegos = covers.copy(), stegos.copy()
    covers[:, 1] = 3.0
    stegos[:, 1] = 3.0
    assert evaluate(train_detector(covers, stegos), covers, stegos) == 1.0


def test_detector_file_round_trip(tmp_path, separable_features):
    covers, stegos = separable_features
    detector = train_detector(covers, stegos, seed=4)
    restored = Detector.load(detector.save(str(tmp_path / 'detector.json')))
    assert restored.seed == 4
    assert np.allclose(restored.decision_function(covers), detector.decision_function(covers))


def test_training_needs_two_examples_per_class(separable_features):
    covers, stegos = separable_features
    with pytest.raises(DegenerateLabelsException):
        train_detector(covers[:1], stegos)
    with pytest.raises(SchemaMismatchException):
        train_detector(covers, stegos[:, :3])


def test_balanced_accuracy():
    labels = np.array([0, 0, 0, 1])
    assert balanced_accuracy(np.array([0, 0, 1, 1]), labels) == pytest.approx(0.5 * (1.0 + 2.0 / 3.0))
    with pytest.raises(InsufficientSamplesException):
        balanced_accuracy(np.array([0, 1]), np.array([0, 0]))


def test_detector_on_real_features(covers):
    from tada2go.toolkit.stego.embedding import EmbeddingConfig, embed_pool
    stegos = embed_pool(covers, EmbeddingConfig('UERD', 1.0))
    cover_vectors = [dctr_features(cover, 'dctr-lite') for cover in covers]
    stego_vectors = [dctr_features(stego, 'dctr-lite') for stego in stegos]
    detector = train_detector(cover_vectors, stego_vectors)
    assert detector.schema_id == 'dctr-lite'
    assert 0.0 <= evaluate(detector, cover_vectors, stego_vectors) <= 1.0
    with pytest.raises(SchemaMismatchException):
        detector.predict([dctr_features(covers[0], 'dctr')])
