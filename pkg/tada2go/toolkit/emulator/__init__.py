from tada2go.toolkit.emulator.kernel import (KernelParams, init_kernel,
                                             orbit_count, orbit_index,
                                             project_constraints)
from tada2go.toolkit.emulator.development import (check_saturation,
                                                  develop_stack,
                                                  forward_develop)
from tada2go.toolkit.emulator.loss import (AlignmentLoss, LossConfig,
                                           TargetReference, batch_loss,
                                           batch_selection, calibrate,
                                           compute_eval, compute_loss,
                                           eval_loss, prepare_target,
                                           shared_quant_table,
                                           source_patch_sets, source_selection)
from tada2go.toolkit.emulator.training import (EpochRecord, TrainingHyperparameters,
                                               TrainingState, gradient, train)
from tada2go.toolkit.emulator.checkpoint import (load_checkpoint,
                                                 save_checkpoint,
                                                 training_log_frame,
                                                 write_training_log)

__all__ = ['KernelParams', 'init_kernel', 'project_constraints', 'orbit_index', 'orbit_count', 'forward_develop',
           'develop_stack', 'check_saturation', 'LossConfig', 'AlignmentLoss', 'TargetReference', 'prepare_target',
           'shared_quant_table', 'compute_loss', 'compute_eval', 'calibrate', 'batch_loss', 'eval_loss',
           'source_patch_sets', 'source_selection', 'batch_selection', 'TrainingHyperparameters', 'TrainingState',
           'EpochRecord', 'gradient', 'train',
           'save_checkpoint', 'load_checkpoint', 'training_log_frame', 'write_training_log']
