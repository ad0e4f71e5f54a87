from tada2go.toolkit.imagery.image import GrayImage, RawPool, read_pgm, write_pgm
from tada2go.toolkit.imagery.synthesis import (crop_by_uniformity, crop_pool,
                                               generate_synthetic_raw)
from tada2go.toolkit.imagery.pipeline import (PipelineConfig, PipelineOp, blur,
                                              convolve, default_catalog,
                                              develop, develop_array,
                                              find_pipeline, identity_pipeline,
                                              load_catalog, save_catalog,
                                              sharpen_pipeline, unsharp_mask)

__all__ = ['GrayImage', 'RawPool', 'read_pgm', 'write_pgm', 'generate_synthetic_raw', 'crop_by_uniformity',
           'crop_pool', 'PipelineConfig', 'PipelineOp', 'convolve', 'unsharp_mask', 'blur', 'develop',
           'develop_array', 'identity_pipeline', 'sharpen_pipeline', 'default_catalog', 'load_catalog',
           'save_catalog', 'find_pipeline']
