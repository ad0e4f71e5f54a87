import math

import numpy as np
import pytest

from tada2go.toolkit.alignmetrics.statistics import second_order
from tada2go.toolkit.exceptions.exceptions import (InfeasiblePayloadException,
                                                   InvalidEmbeddingConfigException)
from tada2go.toolkit.imagery.pipeline import develop, sharpen_pipeline
from tada2go.toolkit.imagery.synthesis import generate_synthetic_raw
from tada2go.toolkit.jpegcodec.compression import (JpegCoeffs, compress_hard,
                                                   compress_soft, count_nzac,
                                                   decompress)
from tada2go.toolkit.residual.patches import PatchConfig, build_patch_sets
from tada2go.toolkit.stego.costs import scheme_costs, uerd_costs, uniform_costs
from tada2go.toolkit.stego.embedding import (EmbeddingConfig, embed_pool,
                                             embedding_probabilities,
                                             payload_lambda_search,
                                             simulate_embedding,
                                             ternary_entropy)


def test_embedding_config_validation():
    with pytest.raises(InvalidEmbeddingConfigException):
        EmbeddingConfig(payload_bpnzac=0.0).validated()
    with pytest.raises(InvalidEmbeddingConfigException):
        EmbeddingConfig(payload_bpnzac=2.0).validated()
    with pytest.raises(InvalidEmbeddingConfigException):
        EmbeddingConfig(scheme='nsF5').validated()


def test_uerd_costs_wet_the_dc(covers):
    cost_map = uerd_costs(covers[0])
    assert np.all(np.isinf(cost_map.costs[..., 0, 0]))
    assert 0 < cost_map.embeddable <= covers[0].coeffs.size - covers[0].blocks_h * covers[0].blocks_w
    assert np.all(cost_map.costs[~cost_map.wet] > 0)


def test_uniform_costs_are_unit(covers):
    cost_map = uniform_costs(covers[0])
    assert set(np.unique(cost_map.costs[~cost_map.wet])) == {1.0}
    with pytest.raises(InvalidEmbeddingConfigException):
        scheme_costs(covers[0], 'J-UNIWARD')


def test_soft_coefficients_cannot_carry_a_payload(raw_pool, qf85):
    with pytest.raises(InvalidEmbeddingConfigException):
        uerd_costs(compress_soft(raw_pool[0], qf85))


def test_flat_image_has_no_capacity(qf85):
    flat = JpegCoeffs(np.zeros((2, 2, 8, 8), dtype=np.int32), qf85)
    with pytest.raises(InfeasiblePayloadException):
        uerd_costs(flat)


@pytest.mark.parametrize('scheme', ['UERD', 'uniform-cost'])
@pytest.mark.parametrize('payload', [0.1, 0.4])
def test_change_probabilities_carry_the_payload(covers, scheme, payload):
    probabilities = embedding_probabilities(covers[0], EmbeddingConfig(scheme, payload))
    assert probabilities.target_bits == pytest.approx(payload * count_nzac(covers[0]))
    carried = ternary_entropy(probabilities.change_probability)
    assert carried == pytest.approx(probabilities.target_bits, rel=5e-3)


def test_payload_beyond_capacity_is_infeasible():
    costs = np.ones((1, 1, 8, 8))
    with pytest.raises(InfeasiblePayloadException):
        payload_lambda_search(costs, 64 * math.log2(3.0) * 1.1)
    assert payload_lambda_search(costs, 64 * math.log2(3.0)) == 0.0
    assert math.isinf(payload_lambda_search(costs, 0.0))


def test_simulated_embedding_changes_by_one(covers):
    cfg = EmbeddingConfig('UERD', 0.4, seed=3)
    stego = simulate_embedding(covers[0], cfg)
    difference = stego.coeffs - covers[0].coeffs
    assert stego.is_integral
    assert set(np.unique(difference)) <= {-1, 0, 1}
    assert np.all(difference[..., 0, 0] == 0)
    assert np.count_nonzero(difference) > 0


def test_embedding_is_reproducible_per_stream(covers):
    cfg = EmbeddingConfig('UERD', 0.4, seed=3)
    assert simulate_embedding(covers[0], cfg, stream=1) == simulate_embedding(covers[0], cfg, stream=1)
    assert simulate_embedding(covers[0], cfg, stream=1) != simulate_embedding(covers[0], cfg, stream=2)
    pool = embed_pool(covers, cfg)
    assert pool[2] == simulate_embedding(covers[2], cfg, stream=2)


def test_change_rate_follows_the_probabilities(covers):
    cfg = EmbeddingConfig('uniform-cost', 0.4, seed=0)
    expected = 2.0 * embedding_probabilities(covers[0], cfg).change_probability.sum()
    changes = np.mean([np.count_nonzero(simulate_embedding(covers[0], cfg, stream=s).coeffs != covers[0].coeffs)
                       for s in range(20)])
    assert changes == pytest.approx(expected, rel=0.1)


def test_embedding_barely_moves_the_residual_fingerprint(qf85):
    raws = generate_synthetic_raw(count=8, size=128, noise_alpha=0.5, noise_beta=4.0, smoothness=1.5, seed=0)

    def developed(scale):
        return [compress_hard(develop(raw, sharpen_pipeline(qf85, scale)).block_aligned(), qf85) for raw in raws]

    def residual_covariance(images):
        patches = build_patch_sets([decompress(image).pixels for image in images], PatchConfig(filters=('KB',)))
        return second_order(patches['KB']).cov

    covers = developed(1.0)
    cover_cov = residual_covariance(covers)
    stego_shift = np.linalg.norm(cover_cov - residual_covariance(embed_pool(covers, EmbeddingConfig('UERD', 0.5))))
    pipeline_shift = np.linalg.norm(cover_cov - residual_covariance(developed(0.5)))
    assert stego_shift < 0.2 * pipeline_shift
