import json
import os

import pandas as pd
import pytest

from tada2go.harness.ablation import apply_axis, run_ablation
from tada2go.harness.config import (ExperimentConfig, as_dict,
                                    config_from_dict, load_config)
from tada2go.harness.experiment import (TargetMaterial, diagonal_gap,
                                        operational_set, run_cross_matrix,
                                        run_experiment, stage, target_id)
from tada2go.harness.report import load_report
from tada2go.toolkit.exceptions.exceptions import (ConfigurationException,
                                                   OutputExistsException,
                                                   StageFailureException)
from tada2go.toolkit.imagery.pipeline import (identity_pipeline, save_catalog,
                                              sharpen_pipeline)
from tada2go.toolkit.jpegcodec.quantization import QuantTable


def tiny_document(tmp_path, strategies):
    catalog = save_catalog([identity_pipeline(QuantTable.from_quality(85)),
                            sharpen_pipeline(QuantTable.from_quality(85))], str(tmp_path / 'catalog.json'))
    pool = {'count': 4, 'size': 64}
    return {
        'name': 'tiny',
        'source': {'pool': pool, 'pipeline': 'identity', 'catalog': catalog},
        'target': {'pipeline': 'S', 'quant_table': 'qf85', 'pool': {'count': 12, 'size': 64, 'seed': 1}},
        'embedding': {'scheme': 'UERD', 'payload_bpnzac': 0.4},
        'training': {'kernel_size': 3, 'max_epochs': 2, 'batch_size': 4},
        'loss': {'subsample': 64, 'sinkhorn_max_iter': 100},
        'strategies': strategies,
        'train_pairs': 4,
        'eval_pairs': 4,
        'operational_size': 4,
        'schema_id': 'dctr-lite',
        'subspace_dims': [2],
        'subspace_fixed_dim': 2,
        'output_dir': str(tmp_path / 'run'),
    }


def test_default_configuration_is_valid():
    config = load_config(None)
    assert config == ExperimentConfig()
    assert config.training.kernel_size == 3 and config.training.lr == 0.001


def test_nested_sections_keep_their_defaults():
    config = config_from_dict({'training': {'max_epochs': 5}, 'target': {'pipeline': '0.5S'}})
    assert config.training.kernel_size == 3 and config.training.max_epochs == 5
    assert config.target.pool.count == 192


def test_payload_upper_bound_is_accepted():
    assert config_from_dict({'embedding': {'payload_bpnzac': 1.5}}).embedding.payload_bpnzac == 1.5


@pytest.mark.parametrize('document', [
    {'unknown': 1},
    {'training': {'kernal_size': 3}},
    {'train_pairs': 'many'},
    {'overwrite': 'yes'},
    {'strategies': ['TADA', 'Oracle']},
    {'balances': []},
    {'schema_id': 'srm'},
    {'training': {'kernel_size': 4}},
    {'training': {'kernel_size': 1}},
    {'training': {'kernel_size': 13}},
    {'target': {'pipeline': 'missing'}},
    {'target': {'pool': {'count': 10}}},
    {'embedding': {'payload_bpnzac': 1.6}},
    {'source': 'identity'},
])
def test_invalid_configurations(document):
    with pytest.raises(ConfigurationException):
        config_from_dict(document)


def test_unreadable_configuration(tmp_path):
    broken = tmp_path / 'broken.json'
    broken.write_text('{not json')
    with pytest.raises(ConfigurationException):
        load_config(str(broken))
    with pytest.raises(ConfigurationException):
        load_config(str(tmp_path / 'missing.json'))


def test_configuration_file_round_trip(tmp_path):
    config = config_from_dict(tiny_document(tmp_path, ['TgtOnly']))
    path = tmp_path / 'resolved.json'
    path.write_text(json.dumps(as_dict(config)))
    assert load_config(str(path)) == config


@pytest.mark.parametrize('axis, value, label, check', [
    ('patch-size', '16x32', '16x32', lambda c: (c.training.patch_h, c.training.patch_w) == (16, 32)),
    ('patch-size', [8, 8], '8x8', lambda c: c.training.patch_w == 8),
    ('kernel-size', 5, '5', lambda c: c.training.kernel_size == 5),
    ('operational-size', 200, '200', lambda c: c.operational_size == 200 and c.target.pool.count == 328),
    ('loss-combo', 'cov+wass', 'cov+wass', lambda c: c.loss.terms_enabled == ('cov', 'wass')),
    ('residual-extractor', 'KB', 'KB', lambda c: c.training.filters == ('KB',)),
    ('constraints', 'none', 'none', lambda c: c.training.constraints == 'none'),
    ('patch-selection', 'off', 'off', lambda c: c.training.select_patches is False),
    ('patch-selection', True, 'on', lambda c: c.training.select_patches is True),
])
def test_ablation_axes(axis, value, label, check):
    got_label, config = apply_axis(ExperimentConfig(), axis, value)
    assert got_label == label
    assert check(config)


@pytest.mark.parametrize('axis, value', [
    ('learning-rate', 0.1),
    ('patch-size', '8x12'),
    ('kernel-size', 'big'),
    ('kernel-size', 4),
    ('residual-extractor', 'SRM'),
    ('constraints', 'orthogonal'),
    ('patch-selection', 'maybe'),
])
def test_invalid_ablation_values(axis, value):
    with pytest.raises(ConfigurationException):
        apply_axis(ExperimentConfig(), axis, value)


def test_operational_set_balances():
    material = TargetMaterial(None, None, ['c0', 'c1', 'c2', 'c3', 'c4'], ['s0', 's1', 's2', 's3', 's4'])
    assert operational_set(material, 'full-cover', 4) == ['c0', 'c1', 'c2', 'c3']
    assert operational_set(material, 'full-stego', 4) == ['s0', 's1', 's2', 's3']
    assert operational_set(material, 'mix', 4) == ['c0', 'c1', 's2', 's3']
    assert operational_set(material, 'mix', 5) == ['c0', 'c1', 'c2', 's3', 's4']


def test_stage_names_the_failure():
    timings = []
    with pytest.raises(StageFailureException) as failure:
        with stage('catalog/seed0', timings):
            raise ValueError('boom')
    assert failure.value.message == 'catalog/seed0'
    assert isinstance(failure.value.cause, ValueError)
    assert 'catalog/seed0' in str(failure.value)
    assert [entry['stage'] for entry in timings] == ['catalog/seed0']


def test_target_id():
    quant = QuantTable.from_quality(85)
    assert target_id(ExperimentConfig(), quant) == 'S@qf85'
    config = ExperimentConfig()._replace(target=ExperimentConfig().target._replace(directory='/data/phone/'))
    assert target_id(config, quant) == 'phone@qf85'


def test_diagonal_gap():
    frame = pd.DataFrame({'source': ['S', 'S', '0.5S', '0.5S'], 'target': ['S', '0.5S', 'S', '0.5S'],
                          'accuracy': [0.9, 0.6, 0.7, 0.8]})
    assert diagonal_gap(frame) == pytest.approx(0.85 - 0.65)


def test_small_experiment_writes_reports(tmp_path):
    strategies = ['TgtOnly', 'SrcOnly', 'Closest-CovFrobenius', 'CORAL']
    config = config_from_dict(tiny_document(tmp_path, strategies))
    rows = run_experiment(config)
    assert len(rows) == len(strategies) * 3
    assert all(0.0 <= row.accuracy <= 1.0 for row in rows)
    assert {row.target for row in rows} == {'S@qf85'}

    output = tmp_path / 'run'
    for name in ('report_full-cover.csv', 'report_mix.csv', 'report_full-stego.csv', 'report.json', 'config.json',
                 'timings.csv'):
        assert os.path.exists(output / name)
    panels = [row for balance in ('full-cover', 'mix', 'full-stego')
              for row in load_report(str(output / f'report_{balance}.csv'))]
    assert load_report(str(output / 'report.json')) == panels
    stages = pd.read_csv(output / 'timings.csv')['stage'].tolist()
    assert stages[0] == 'synthesize' and 'catalog/seed0' in stages

    by_strategy = {row.strategy: row for row in rows if row.balance == 'full-cover'}
    assert by_strategy['TgtOnly'].selected_source == 'S@qf85'
    assert by_strategy['Closest-CovFrobenius'].selected_source in ('identity', 'S')

    with pytest.raises(OutputExistsException):
        run_experiment(config)
    first = (output / 'report_mix.csv').read_bytes()
    run_experiment(config._replace(overwrite=True))
    assert (output / 'report_mix.csv').read_bytes() == first


def test_balance_free_strategies_repeat_across_balances(tmp_path):
    config = config_from_dict(tiny_document(tmp_path, ['TgtOnly', 'SrcOnly', 'Multiclassifier']))
    rows = run_experiment(config)
    for strategy in ('TgtOnly', 'SrcOnly', 'Multiclassifier'):
        assert len({(row.accuracy, row.detail) for row in rows if row.strategy == strategy}) == 1
    routed = next(row for row in rows if row.strategy == 'Multiclassifier')
    assert routed.selected_source == 'routed'
    assert sum(int(part.split('=')[1]) for part in routed.detail.split(';')) == 2 * config.eval_pairs


def test_ablation_runs_one_experiment_per_value(tmp_path):
    config = config_from_dict(tiny_document(tmp_path, ['TgtOnly']))
    with pytest.raises(ConfigurationException):
        run_ablation(config, 'kernel-size', [])
    with pytest.raises(ConfigurationException):
        run_ablation(config, 'kernel-size', [3, '3'])
    table = run_ablation(config, 'patch-selection', ['on', 'off'])
    assert list(table.columns[:2]) == ['axis', 'value']
    assert sorted(set(table['value'])) == ['off', 'on']
    assert len(table) == 2 * 3
    assert os.path.exists(tmp_path / 'run' / 'ablation_patch-selection.csv')
    assert os.path.exists(tmp_path / 'run' / 'ablation-patch-selection' / 'off' / 'report.json')


@pytest.mark.slow
def test_full_strategy_set(tmp_path):
    document = tiny_document(tmp_path, ['TgtOnly', 'SrcOnly', 'All', 'Multiclassifier', 'Closest-NSCD',
                                        'Closest-MMD', 'Closest-Wasserstein', 'SubspaceAlignment', 'TADA'])
    rows = run_experiment(config_from_dict(document))
    tada = [row for row in rows if row.strategy == 'TADA']
    assert len(tada) == 3
    assert all(row.l_eval_final <= row.l_eval_init for row in tada)
    assert os.path.exists(tmp_path / 'run' / 'tada' / 'mix_seed0_kernel.json')


def mismatch_document(tmp_path, strategies, balances):
    return {
        'name': 'mismatch',
        'source': {'pool': {'count': 128, 'size': 128}, 'pipeline': '0.5S'},
        'target': {'pipeline': 'S', 'quant_table': 'qf85', 'pool': {'count': 320, 'size': 128, 'seed': 1}},
        'embedding': {'scheme': 'UERD', 'payload_bpnzac': 0.5},
        'training': {'kernel_size': 3, 'max_epochs': 60, 'batch_size': 16, 'lr': 0.005, 'patience_lr': 10,
                     'patience_stop': 20},
        'strategies': strategies,
        'balances': balances,
        'seeds': [0, 1, 2],
        'train_pairs': 128,
        'eval_pairs': 128,
        'operational_size': 64,
        'schema_id': 'dctr-lite',
        'output_dir': str(tmp_path / 'mismatch'),
    }


@pytest.mark.slow
def test_cross_matrix_is_diagonally_dominant(tmp_path):
    config = config_from_dict(mismatch_document(tmp_path, ['TgtOnly'], ['full-cover']))
    frame = run_cross_matrix(config)
    assert len(frame) == 3 * 4
    assert diagonal_gap(frame) >= 0.03


@pytest.mark.slow
def test_emulated_source_closes_the_mismatch(tmp_path):
    config = config_from_dict(mismatch_document(tmp_path, ['TgtOnly', 'SrcOnly', 'TADA'], ['full-cover']))
    means = pd.DataFrame(run_experiment(config)).groupby('strategy')['accuracy'].mean()
    assert means['TADA'] >= means['SrcOnly'] + 0.03
    assert means['TADA'] >= (means['SrcOnly'] + means['TgtOnly']) / 2


@pytest.mark.slow
def test_learned_development_ignores_the_operational_balance(tmp_path):
    config = config_from_dict(mismatch_document(tmp_path, ['TADA'], ['full-cover', 'full-stego']))
    frame = pd.DataFrame(run_experiment(config))
    means = frame.groupby('balance')['accuracy'].mean()
    assert abs(means['full-cover'] - means['full-stego']) <= 0.05
    l_eval = frame.groupby('balance')['l_eval_final'].mean()
    assert abs(l_eval['full-cover'] - l_eval['full-stego']) <= 0.25 * max(l_eval)
