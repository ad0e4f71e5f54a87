"""
Kernel checkpoints (versioned JSON) and per-epoch training logs (CSV).
"""
import json
import os
from typing import Tuple

import pandas as pd

from tada2go.toolkit.emulator.kernel import KernelParams
from tada2go.toolkit.emulator.training import TrainingState
from tada2go.toolkit.exceptions.exceptions import (ImageIOException,
                                                   InvalidKernelException)
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import LOSS_TERMS

CHECKPOINT_FORMAT = 'tada2go-kernel'
CHECKPOINT_VERSION = 1


def checkpoint_record(state: TrainingState, quant_id: str) -> dict:
    return {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'quant_table_id': quant_id,
        'epoch': state.epoch,
        'best_eval': state.best_eval,
        'initial_eval': state.initial_eval,
        'stop_reason': state.stop_reason,
        'eval_history': state.eval_history,
        **state.best_kernel.to_dict(),
    }


def save_checkpoint(state: TrainingState, path: str, quant_id: str) -> str:
    """
    Writes the best kernel of a run with its L_eval history.

    Args:
        state (TrainingState): Training state.
        path (str): Destination JSON file.
        quant_id (str): Identifier of the target quantization table.

    Returns:
        str: The written path.

    Raises:
        ImageIOException: If the file cannot be written.
    """
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as file_handler:
            json.dump(checkpoint_record(state, quant_id), file_handler, indent=2)
    except OSError:
        msg = f"Failed to write checkpoint '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"Checkpoint '{path}'")
    return path


def load_checkpoint(path: str) -> Tuple[KernelParams, dict]:
    """
    Reads a checkpoint.

    Returns:
        Tuple[KernelParams, dict]: The kernel and the full record.

    Raises:
        ImageIOException: If the file cannot be read.
        InvalidKernelException: If the record is not a supported checkpoint.
    """
    try:
        with open(path, 'r') as file_handler:
            record = json.load(file_handler)
    except OSError:
        msg = f"Failed to read checkpoint '{path}'."
        logger.exception(msg)
        raise ImageIOException(f"Checkpoint '{path}'")
    except json.JSONDecodeError as err:
        raise InvalidKernelException(f"Checkpoint '{path}' is not valid JSON: {err}")

    if record.get('format') != CHECKPOINT_FORMAT or record.get('version') != CHECKPOINT_VERSION:
        raise InvalidKernelException(
            f"Unsupported checkpoint '{path}' (format {record.get('format')}, version {record.get('version')}).")
    return KernelParams.from_dict(record), record


def training_log_frame(state: TrainingState) -> pd.DataFrame:
    """One row per epoch: epoch, lr, raw and normalized terms, loss total, L_eval and the best flag."""
    rows = []
    for entry in state.history:
        row = {'epoch': entry.epoch, 'lr': entry.lr}
        for term in LOSS_TERMS:
            row[f'raw_{term}'] = entry.raw.get(term)
            row[f'norm_{term}'] = entry.normalized.get(term)
        row.update({'loss_total': entry.total, 'l_eval': entry.l_eval, 'best': entry.best})
        rows.append(row)
    columns = ['epoch', 'lr'] + [f'{kind}_{term}' for term in LOSS_TERMS for kind in ('raw', 'norm')] + \
        ['loss_total', 'l_eval', 'best']
    return pd.DataFrame(rows, columns=columns)


def write_training_log(state: TrainingState, path: str) -> str:
    training_log_frame(state).to_csv(path, index=False, float_format='%.10g')
    return path
