import os

import pytest

from tada2go.harness.cli import build_parser, main
from tada2go.harness.report import ReportRow, emit_report, load_report
from tada2go.toolkit.utils.constants import (EXIT_CONFIG_ERROR,
                                             EXIT_STAGE_FAILURE, EXIT_SUCCESS)


def test_parser_commands():
    parser = build_parser()
    args = parser.parse_args(['baseline', '--strategies', 'TgtOnly', 'CORAL', '--overwrite'])
    assert args.strategies == ['TgtOnly', 'CORAL'] and args.overwrite
    args = parser.parse_args(['ablation', '--axis', 'kernel-size', '--values', '3', '5'])
    assert args.values == ['3', '5']
    with pytest.raises(SystemExit):
        parser.parse_args(['ablation', '--axis', 'learning-rate', '--values', '1'])
    with pytest.raises(SystemExit):
        parser.parse_args([])


def test_bad_configuration_exits_with_config_error(tmp_path):
    config = tmp_path / 'config.json'
    config.write_text('{"strategies": ["Oracle"]}')
    assert main(['experiment', '--config', str(config)]) == EXIT_CONFIG_ERROR


def test_synth_develop_compress_chain(tmp_path):
    raw_dir, developed_dir, jpeg_dir = (str(tmp_path / name) for name in ('raw', 'developed', 'jpeg'))
    assert main(['synth', '--count', '3', '--size', '32', '--out', raw_dir]) == EXIT_SUCCESS
    assert sorted(os.listdir(raw_dir)) == ['raw_0000.pgm', 'raw_0001.pgm', 'raw_0002.pgm']
    assert main(['develop', '--input', raw_dir, '--pipeline', 'S', '--out', developed_dir]) == EXIT_SUCCESS
    assert len(os.listdir(developed_dir)) == 3
    assert main(['compress', '--input', developed_dir, '--quant', 'qf75', '--out', jpeg_dir]) == EXIT_SUCCESS
    assert len(os.listdir(jpeg_dir)) == 3


def test_unknown_pipeline_is_a_stage_failure(tmp_path):
    raw_dir = str(tmp_path / 'raw')
    main(['synth', '--count', '1', '--size', '16', '--out', raw_dir])
    assert main(['develop', '--input', raw_dir, '--pipeline', 'nope', '--out', str(tmp_path / 'out')]) \
        == EXIT_STAGE_FAILURE


def test_report_command_merges_files(tmp_path):
    first = emit_report([ReportRow('TgtOnly', 'S@qf85', 'mix', 0, 0.75)], str(tmp_path / 'a.csv'))
    second = emit_report([ReportRow('TADA', 'S@qf85', 'full-cover', 0, 0.5)], str(tmp_path / 'b.json'), 'json')
    merged = str(tmp_path / 'merged.json')
    assert main(['report', first, second, '--format', 'json', '--out', merged]) == EXIT_SUCCESS
    assert [row.strategy for row in load_report(merged)] == ['TgtOnly', 'TADA']
    panels = str(tmp_path / 'panels')
    assert main(['report', first, second, '--panels', '--out', panels]) == EXIT_SUCCESS
    assert sorted(os.listdir(panels)) == ['report_full-cover.csv', 'report_mix.csv']


def test_detector_chain(tmp_path, capsys):
    raw_dir, cover_dir, stego_dir = (str(tmp_path / name) for name in ('raw', 'covers', 'stegos'))
    main(['synth', '--count', '3', '--size', '32', '--out', raw_dir])
    assert main(['compress', '--input', raw_dir, '--out', cover_dir]) == EXIT_SUCCESS
    assert main(['embed', '--input', cover_dir, '--payload', '0.4', '--out', stego_dir]) == EXIT_SUCCESS
    cover_csv, stego_csv, detector = (str(tmp_path / name) for name in ('c.csv', 's.csv', 'detector.json'))
    assert main(['features', '--input', cover_dir, '--schema', 'dctr-lite', '--label', '0', '--out', cover_csv]) \
        == EXIT_SUCCESS
    assert main(['features', '--input', stego_dir, '--schema', 'dctr-lite', '--label', '1', '--out', stego_csv]) \
        == EXIT_SUCCESS
    assert main(['train-detector', '--covers', cover_csv, '--stegos', stego_csv, '--out', detector]) == EXIT_SUCCESS
    capsys.readouterr()
    assert main(['eval', '--detector', detector, '--covers', cover_csv, '--stegos', stego_csv]) == EXIT_SUCCESS
    accuracy = float(capsys.readouterr().out.strip().split('=')[1])
    assert 0.0 <= accuracy <= 1.0
