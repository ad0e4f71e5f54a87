from tada2go.toolkit.baselines.catalog import (CatalogEntry, LabeledSet,
                                               SourceCatalog, TargetBundle,
                                               build_all_mixture,
                                               build_catalog, develop_covers,
                                               feature_stack, labeled_set,
                                               parallel_map, train_on)
from tada2go.toolkit.baselines.selection import (SELECTION_METRICS,
                                                 RoutingResult,
                                                 SelectionResult, fit_router,
                                                 metric_table,
                                                 multiclassifier_route,
                                                 routed_predict,
                                                 select_closest_source)
from tada2go.toolkit.baselines.adaptation import (SubspaceAlignment,
                                                  coral_transform,
                                                  coral_whiten, pca_basis,
                                                  subspace_align)

__all__ = ['CatalogEntry', 'LabeledSet', 'SourceCatalog', 'TargetBundle', 'build_catalog', 'build_all_mixture',
           'develop_covers', 'feature_stack', 'labeled_set', 'parallel_map', 'train_on', 'SELECTION_METRICS',
           'SelectionResult', 'RoutingResult', 'metric_table', 'select_closest_source', 'fit_router',
           'multiclassifier_route', 'routed_predict', 'SubspaceAlignment', 'subspace_align', 'pca_basis',
           'coral_transform', 'coral_whiten']
