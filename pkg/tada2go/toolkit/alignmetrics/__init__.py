from tada2go.toolkit.alignmetrics.statistics import (
    SecondOrderStats, covariance, covariance_frobenius_distance,
    frobenius_distance, second_order)
from tada2go.toolkit.alignmetrics.transport import (SinkhornResult,
                                                    entropic_ot,
                                                    exact_ot_small,
                                                    median_cost,
                                                    sinkhorn_divergence)
from tada2go.toolkit.alignmetrics.discrepancy import (MMDResult,
                                                      chordal_distance,
                                                      median_bandwidth, mmd,
                                                      subspace_basis)

__all__ = ['SecondOrderStats', 'second_order', 'covariance', 'frobenius_distance', 'covariance_frobenius_distance',
           'SinkhornResult', 'sinkhorn_divergence', 'entropic_ot', 'exact_ot_small', 'median_cost', 'MMDResult',
           'mmd', 'median_bandwidth', 'subspace_basis', 'chordal_distance']
