from tada2go.toolkit.stego.costs import (CostMap, block_energy, scheme_costs,
                                         uerd_costs, uniform_costs)
from tada2go.toolkit.stego.embedding import (EmbeddingConfig,
                                             EmbeddingProbabilities,
                                             change_probabilities, embed_pool,
                                             embedding_probabilities,
                                             payload_lambda_search,
                                             simulate_embedding,
                                             ternary_entropy)

__all__ = ['CostMap', 'block_energy', 'uerd_costs', 'uniform_costs', 'scheme_costs', 'EmbeddingConfig',
           'EmbeddingProbabilities', 'change_probabilities', 'ternary_entropy', 'payload_lambda_search',
           'embedding_probabilities', 'simulate_embedding', 'embed_pool']
