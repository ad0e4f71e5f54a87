import json

import pandas as pd
import pytest

from tada2go.harness.report import (ReportRow, emit_panels, emit_report,
                                    load_report, summary_table)
from tada2go.toolkit.exceptions.exceptions import ReportException
from tada2go.toolkit.utils.constants import REPORT_COLUMNS

ROWS = [
    ReportRow('TgtOnly', 'S@qf85', 'full-cover', 0, 0.8125, 'S@qf85'),
    ReportRow('TADA', 'S@qf85', 'full-cover', 0, 2.0 / 3.0, 'tada-full-cover', 1.5, 0.25, 'epochs=12; stop=patience'),
    ReportRow('TgtOnly', 'S@qf85', 'mix', 0, 0.8125, 'S@qf85'),
    ReportRow('TADA', 'S@qf85', 'mix', 0, 0.75, 'tada-mix', 1.5, 0.5, 'epochs=3; stop=max-epochs'),
    ReportRow('TgtOnly', 'S@qf85', 'mix', 1, 0.6875, 'S@qf85'),
]


def test_empty_report_is_refused(tmp_path):
    with pytest.raises(ReportException):
        emit_report([], str(tmp_path / 'report.csv'))
    with pytest.raises(ReportException):
        emit_panels([], str(tmp_path))
    with pytest.raises(ReportException):
        emit_report(ROWS, str(tmp_path / 'report.xml'), 'xml')


def test_csv_header_and_precision(tmp_path):
    path = emit_report(ROWS, str(tmp_path / 'report.csv'))
    frame = pd.read_csv(path)
    assert tuple(frame.columns) == REPORT_COLUMNS
    with open(path) as file_handler:
        lines = file_handler.read().splitlines()
    assert '0.666667' in lines[2]


@pytest.mark.parametrize('suffix, report_format', [('csv', 'csv'), ('json', 'json')])
def test_report_files_load_back(tmp_path, suffix, report_format):
    path = emit_report(ROWS, str(tmp_path / f'report.{suffix}'), report_format)
    loaded = load_report(path)
    assert [row.strategy for row in loaded] == [row.strategy for row in ROWS]
    assert loaded[1].accuracy == pytest.approx(2.0 / 3.0, abs=1e-6)
    assert loaded[0].l_eval_init is None and loaded[0].detail == ''
    assert loaded[3].detail == 'epochs=3; stop=max-epochs'


def test_json_keeps_column_order(tmp_path):
    path = emit_report(ROWS[:1], str(tmp_path / 'nested' / 'report.json'), 'json')
    with open(path) as file_handler:
        records = json.load(file_handler)
    assert list(records[0]) == list(REPORT_COLUMNS)


def test_reports_missing_columns(tmp_path):
    path = tmp_path / 'partial.csv'
    path.write_text('strategy,accuracy\nTADA,0.5\n')
    with pytest.raises(ReportException):
        load_report(str(path))
    with pytest.raises(ReportException):
        load_report(str(tmp_path / 'absent.csv'))


def test_one_panel_per_balance(tmp_path):
    paths = emit_panels(ROWS, str(tmp_path))
    assert list(paths) == ['full-cover', 'mix']
    assert paths['mix'].endswith('report_mix.csv')
    assert len(load_report(paths['mix'])) == 3


def test_summary_averages_seeds():
    table = summary_table(ROWS)
    assert list(table.columns) == ['full-cover', 'mix']
    assert table.loc['TgtOnly', 'mix'] == pytest.approx(0.75)
    assert table.loc['TADA', 'full-cover'] == pytest.approx(2.0 / 3.0)
