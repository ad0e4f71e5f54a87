from tada2go.toolkit.residual.filters import (KB_FILTER, L4_FILTER,
                                              RESIDUAL_FILTERS, ResidualFilter,
                                              apply_filter, apply_filter_array,
                                              get_filter)
from tada2go.toolkit.residual.patches import (PatchConfig, ResidualPatchSet,
                                              build_patch_sets,
                                              extract_patch_array,
                                              extract_patches, log_patch_sets,
                                              select_by_variance,
                                              variance_selection_mask)

__all__ = ['ResidualFilter', 'KB_FILTER', 'L4_FILTER', 'RESIDUAL_FILTERS', 'get_filter', 'apply_filter',
           'apply_filter_array', 'ResidualPatchSet', 'PatchConfig', 'extract_patches', 'extract_patch_array', 'select_by_variance',
           'variance_selection_mask', 'build_patch_sets', 'log_patch_sets']
