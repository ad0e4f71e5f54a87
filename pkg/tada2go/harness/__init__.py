from tada2go.harness.config import (ExperimentConfig, PoolConfig,
                                    SourceConfig, TargetConfig, load_config,
                                    validate_config)
from tada2go.harness.report import (ReportRow, emit_panels, emit_report,
                                    load_report)
from tada2go.harness.experiment import (run_cross_matrix, run_experiment,
                                        stage)
from tada2go.harness.ablation import apply_axis, run_ablation

__all__ = ['ExperimentConfig', 'PoolConfig', 'SourceConfig', 'TargetConfig', 'load_config', 'validate_config',
           'ReportRow', 'emit_report', 'emit_panels', 'load_report', 'run_experiment', 'run_cross_matrix', 'stage',
           'apply_axis', 'run_ablation']
