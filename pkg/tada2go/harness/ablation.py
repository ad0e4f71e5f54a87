import os
from typing import Any, List, Sequence, Tuple

import pandas as pd

from tada2go.harness.config import (ExperimentConfig, resolve_output_dir,
                                    validate_config)
from tada2go.harness.experiment import run_experiment
from tada2go.harness.report import report_frame
from tada2go.toolkit.exceptions.exceptions import ConfigurationException
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import (ABLATION_AXES,
                                             REPORT_FLOAT_PRECISION)

_SWITCHES = {'on': True, 'off': False, 'true': True, 'false': False}


def _split(value: Any, separator: str) -> Tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(str(item) for item in value)
    return tuple(part for part in str(value).split(separator) if part)


def apply_axis(config: ExperimentConfig, axis: str, value: Any) -> Tuple[str, ExperimentConfig]:
    """
    Changes one ablation axis of a configuration.

    Accepted values: patch-size '8x16' or [8, 16]; kernel-size an odd integer; operational-size an integer;
    loss-combo 'cov+wass' or a list of terms; residual-extractor 'KB', 'L4' or 'KB+L4'; constraints 'none',
    'sum-to-1', 'symmetry' or 'both'; patch-selection 'on' / 'off'.

    Returns:
        Tuple[str, ExperimentConfig]: A label of the value and the validated configuration.

    Raises:
        ConfigurationException: If the axis is unknown or the value invalid for it.
    """
    training = config.training
    try:
        if axis == 'patch-size':
            height, width = (int(side) for side in _split(value, 'x'))
            label, changed = f"{height}x{width}", config._replace(training=training._replace(patch_h=height, patch_w=width))
        elif axis == 'kernel-size':
            label, changed = str(int(value)), config._replace(training=training._replace(kernel_size=int(value)))
        elif axis == 'operational-size':
            size = int(value)
            needed = config.train_pairs + config.eval_pairs + size
            pool = config.target.pool._replace(count=max(config.target.pool.count, needed))
            label = str(size)
            changed = config._replace(operational_size=size, target=config.target._replace(pool=pool))
        elif axis == 'loss-combo':
            terms = _split(value, '+')
            label, changed = '+'.join(terms), config._replace(loss=config.loss._replace(terms_enabled=terms))
        elif axis == 'residual-extractor':
            filters = _split(value, '+')
            label, changed = '+'.join(filters), config._replace(training=training._replace(filters=filters))
        elif axis == 'constraints':
            label, changed = str(value), config._replace(training=training._replace(constraints=str(value)))
        elif axis == 'patch-selection':
            select = value if isinstance(value, bool) else _SWITCHES[str(value).lower()]
            label = 'on' if select else 'off'
            changed = config._replace(training=training._replace(select_patches=select))
        else:
            raise ConfigurationException(f"Unknown ablation axis '{axis}', expected one of {ABLATION_AXES}.")
    except (ValueError, KeyError, TypeError):
        raise ConfigurationException(f"Invalid value {value!r} for ablation axis '{axis}'.")
    return label, validate_config(changed)


def run_ablation(base_config: ExperimentConfig, axis: str, values: Sequence[Any]) -> pd.DataFrame:
    """
    Runs one experiment per value with only the given axis changed, and consolidates the reports.

    Every value is validated before the first run. Runs are written to <output>/ablation-<axis>/<label>;
    the consolidated table goes to <output>/ablation_<axis>.csv.

    Args:
        base_config (ExperimentConfig): Configuration shared by all runs.
        axis (str): One of the ablation axes.
        values (Sequence): Values of the axis.

    Returns:
        pd.DataFrame: Report rows of every run with leading 'axis' and 'value' columns.

    Raises:
        ConfigurationException: If the axis is unknown, a value invalid or values empty.
    """
    if not values:
        raise ConfigurationException(f"No value given for ablation axis '{axis}'.")
    base_dir = resolve_output_dir(base_config)
    runs: List[Tuple[str, ExperimentConfig]] = []
    for value in values:
        label, changed = apply_axis(base_config, axis, value)
        output_dir = os.path.join(base_dir, f"ablation-{axis}", label)
        runs.append((label, changed._replace(name=f"{base_config.name}-{axis}-{label}", output_dir=output_dir)))
    labels = [label for label, _ in runs]
    if len(set(labels)) != len(labels):
        raise ConfigurationException(f"Ablation values repeat: {labels}.")

    frames = []
    for label, config in runs:
        logger.info(f"Ablation {axis}={label}: running experiment '{config.name}'.")
        frame = report_frame(run_experiment(config))
        frame.insert(0, 'value', label)
        frame.insert(0, 'axis', axis)
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True)
    os.makedirs(base_dir, exist_ok=True)
    table.to_csv(os.path.join(base_dir, f"ablation_{axis}.csv"), index=False,
                 float_format=f'%.{REPORT_FLOAT_PRECISION}f')
    summary = table.pivot_table(index=['value', 'strategy'], columns='balance', values='accuracy', aggfunc='mean',
                                sort=False)
    logger.info(f"Ablation over {axis}:\n{summary.to_string()}")
    return table
