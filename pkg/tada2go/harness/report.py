"""
Report rows and their CSV / JSON files: stable column order, fixed float precision, one file per balance panel.
"""
import json
import math
import os
from typing import Dict, List, NamedTuple, Optional, Sequence

import pandas as pd

from tada2go.toolkit.exceptions.exceptions import ReportException
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.utils.constants import (BALANCES, REPORT_COLUMNS,
                                             REPORT_FLOAT_PRECISION)

REPORT_FORMATS = ('csv', 'json')


class ReportRow(NamedTuple):
    """
    Named tuple for one strategy result.

    Attributes:
        strategy (str): Strategy id.
        target (str): Target id (pipeline and table).
        balance (str): Operational-set balance.
        seed (int): Repetition seed.
        accuracy (float): Balanced accuracy on the evaluation set.
        selected_source (str): Source(s) the strategy trained on.
        l_eval_init (float, optional): Initial kernel-learning L_eval (TADA only).
        l_eval_final (float, optional): Best kernel-learning L_eval (TADA only).
        detail (str): Strategy-specific diagnostics.
    """
    strategy: str
    target: str
    balance: str
    seed: int
    accuracy: float
    selected_source: str = ''
    l_eval_init: Optional[float] = None
    l_eval_final: Optional[float] = None
    detail: str = ''


def _rounded(value):
    if isinstance(value, float):
        return None if math.isnan(value) else round(value, REPORT_FLOAT_PRECISION)
    return value


def report_frame(rows: Sequence[ReportRow]) -> pd.DataFrame:
    return pd.DataFrame([row._asdict() for row in rows], columns=list(REPORT_COLUMNS))


def emit_report(rows: Sequence[ReportRow], path: str, report_format: str = 'csv') -> str:
    """
    Writes report rows to one file.

    Args:
        rows (Sequence[ReportRow]): Non-empty rows, written in the given order.
        path (str): Destination file.
        report_format (str, optional): 'csv' or 'json'. Defaults to 'csv'.

    Returns:
        str: The written path.

    Raises:
        ReportException: If there is no row, the format is unknown or the file cannot be written.
    """
    if not rows:
        raise ReportException("No report row to write.")
    if report_format not in REPORT_FORMATS:
        raise ReportException(f"Unknown report format '{report_format}', expected one of {REPORT_FORMATS}.")
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        if report_format == 'csv':
            report_frame(rows).to_csv(path, index=False, float_format=f'%.{REPORT_FLOAT_PRECISION}f')
        else:
            records = [{column: _rounded(getattr(row, column)) for column in REPORT_COLUMNS} for row in rows]
            with open(path, 'w') as file_handler:
                json.dump(records, file_handler, indent=2)
    except OSError:
        msg = f"Failed to write report '{path}'."
        logger.exception(msg)
        raise ReportException(msg)
    logger.info(f"Wrote {len(rows)} report rows to '{path}'.")
    return path


def _optional_float(value) -> Optional[float]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(value)


def _row(record: dict) -> ReportRow:
    missing = [column for column in REPORT_COLUMNS if column not in record]
    if missing:
        raise ReportException(f"Report record lacks columns {missing}.")
    text = {column: '' if record[column] is None or (isinstance(record[column], float) and math.isnan(record[column]))
            else str(record[column]) for column in ('strategy', 'target', 'balance', 'selected_source', 'detail')}
    return ReportRow(text['strategy'], text['target'], text['balance'], int(record['seed']),
                     float(record['accuracy']), text['selected_source'], _optional_float(record['l_eval_init']),
                     _optional_float(record['l_eval_final']), text['detail'])


def load_report(path: str) -> List[ReportRow]:
    """
    Reads a report written by emit_report; the format follows the file suffix.

    Raises:
        ReportException: If the file cannot be read or lacks report columns.
    """
    try:
        if path.lower().endswith('.json'):
            with open(path, 'r') as file_handler:
                records = json.load(file_handler)
        else:
            records = pd.read_csv(path, dtype={'selected_source': str, 'detail': str}).to_dict(orient='records')
    except (OSError, ValueError, pd.errors.ParserError, pd.errors.EmptyDataError):
        msg = f"Failed to read report '{path}'."
        logger.exception(msg)
        raise ReportException(msg)
    return [_row(record) for record in records]


def emit_panels(rows: Sequence[ReportRow], directory: str, report_format: str = 'csv',
                stem: str = 'report') -> Dict[str, str]:
    """
    Writes one report file per balance present in rows: <stem>_<balance>.<format>.

    Returns:
        Dict[str, str]: Balance to written path, in the canonical balance order.
    """
    if not rows:
        raise ReportException("No report row to write.")
    order = [balance for balance in BALANCES if any(row.balance == balance for row in rows)]
    order += sorted({row.balance for row in rows} - set(order))
    return {balance: emit_report([row for row in rows if row.balance == balance],
                                 os.path.join(directory, f"{stem}_{balance}.{report_format}"), report_format)
            for balance in order}


def summary_table(rows: Sequence[ReportRow]) -> pd.DataFrame:
    """Mean accuracy over seeds, one row per strategy and one column per balance."""
    frame = report_frame(rows)
    table = frame.pivot_table(index='strategy', columns='balance', values='accuracy', aggfunc='mean', sort=False)
    columns = [balance for balance in BALANCES if balance in table.columns]
    return table[columns + [column for column in table.columns if column not in columns]]
