from tada2go.toolkit.steganalysis.features import (SCHEMAS, FeatureSchema,
                                                   FeatureVector,
                                                   dctr_features,
                                                   extract_features,
                                                   feature_matrix, get_schema,
                                                   read_feature_csv,
                                                   residual_step, to_vectors,
                                                   write_feature_csv)
from tada2go.toolkit.steganalysis.detector import (Detector,
                                                   balanced_accuracy,
                                                   evaluate, train_detector)

__all__ = ['SCHEMAS', 'FeatureSchema', 'FeatureVector', 'get_schema', 'residual_step', 'dctr_features',
           'extract_features', 'feature_matrix', 'to_vectors', 'write_feature_csv', 'read_feature_csv', 'Detector',
           'train_detector', 'evaluate', 'balanced_accuracy']
