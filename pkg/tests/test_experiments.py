import filecmp
import json
import os
import signal

import pandas as pd
import pytest

import main
from config import SIMULATION_CONFIG
from conftest import SLOT, write_scenario
from costs import COMPONENTS
from experiments import ExperimentRunner, run_experiment
from scenario import ScenarioConfig


@pytest.fixture
def config(scenario_dir):
    return ScenarioConfig(scenario_dir, rounds=3, lambdas=[0.0, 1.0], slot_length=SLOT, plans_per_agent=4,
                          max_iterations=4, planner_ratios=[1.0, 2.0], planner_active_counts=[1, 2, 3],
                          planner_repetitions=2)


def test_exp1_writes_metrics_and_comparison(config, tmp_path):
    out = str(tmp_path / 'exp1')
    paths = run_experiment('exp1', config, out, seeds=[1])
    names = sorted(os.path.basename(path) for path in paths)
    assert names == ['exp1_cost_comparison.csv', 'exp1_iterations.csv', 'exp1_metrics.csv', 'exp1_summary.csv',
                     'manifest.json']

    metrics = pd.read_csv(os.path.join(out, 'exp1_metrics.csv'))
    assert set(metrics['strategy']) == {'mera', 'baseline', 'greedy'}
    assert set(metrics['regime']) == {'default', 'optimized'}
    assert metrics.loc[metrics['strategy'] == 'baseline', 'lambda'].isna().all()
    assert set(metrics.loc[metrics['strategy'] == 'mera', 'lambda']) == {0.0, 1.0}

    comparison = pd.read_csv(os.path.join(out, 'exp1_cost_comparison.csv'))
    assert len(comparison) == 2 * 2 * 2 * (len(COMPONENTS) + 1)

    with open(os.path.join(out, 'manifest.json')) as manifest_file:
        manifest = json.load(manifest_file)
    assert manifest['suite'] == 'exp1'
    assert manifest['seeds'] == [1]


def test_results_do_not_depend_on_worker_count(config, tmp_path):
    serial = ExperimentRunner(config, str(tmp_path / 'serial'), seeds=[2], workers=1)
    parallel = ExperimentRunner(config, str(tmp_path / 'parallel'), seeds=[2], workers=2)
    serial.run('exp1')
    parallel.run('exp1')
    for name in ('exp1_metrics.csv', 'exp1_iterations.csv', 'exp1_summary.csv'):
        assert filecmp.cmp(os.path.join(serial.out_dir, name), os.path.join(parallel.out_dir, name), shallow=False)


def test_exp2_slides_windows(config, tmp_path, monkeypatch):
    monkeypatch.setitem(SIMULATION_CONFIG, 'window_profiles', 1)
    out = str(tmp_path / 'exp2')
    run_experiment('exp2', config, out, seeds=[1])
    windows = pd.read_csv(os.path.join(out, 'exp2_windows.csv'))
    assert sorted(windows['window'].unique()) == [0, 1]
    assert len(windows) == 2 * 2 * 4
    assert os.path.exists(os.path.join(out, 'exp2_regime_change.csv'))


def test_exp3_grid_skips_oversized_cells(config, tmp_path):
    out = str(tmp_path / 'exp3')
    run_experiment('exp3', config, out, seeds=[1], regimes=['default'])
    grid = pd.read_csv(os.path.join(out, 'exp3_grid.csv'))
    assert len(grid) == 2 * 2 * 2
    assert set(grid['active_count']) == {1, 2}
    assert (grid['capacity'] / grid['demand']).round(9).isin([1.0, 2.0]).all()
    for label in ('mera@0', 'mera@1', 'baseline', 'greedy'):
        assert {f"cv_{label}", f"cost_{label}", f"spill_{label}"} <= set(grid.columns)
    assert ((grid['spill_baseline'] >= 0.0) & (grid['spill_baseline'] <= 1.0)).all()


def test_exp4_alignment(config, tmp_path):
    out = str(tmp_path / 'exp4')
    run_experiment('exp4', config, out, seeds=[1], regimes=['optimized'])
    alignment = pd.read_csv(os.path.join(out, 'exp4_alignment.csv'))
    assert len(alignment) == 4
    assert set(alignment['strategy']) == {'mera', 'baseline', 'greedy'}


def test_unknown_suite(config, tmp_path):
    with pytest.raises(ValueError):
        run_experiment('exp9', config, str(tmp_path))


class TestCommandLine:

    @pytest.fixture(autouse=True)
    def keep_signal_handlers(self, monkeypatch):
        monkeypatch.setattr(signal, 'signal', lambda *args: None)

    def test_validate(self, tmp_path):
        directory = write_scenario(str(tmp_path / 'full'), profiles=12)
        assert main.main(['--no-log-file', 'validate', directory]) == 0
        assert main.main(['--no-log-file', 'validate', str(tmp_path / 'missing')]) == 1

    def test_run(self, scenario_dir, tmp_path):
        out = str(tmp_path / 'results')
        code = main.main(['--no-log-file', 'run', '--suite', 'exp1', '--scenario', scenario_dir, '--out', out,
                          '--rounds', '3', '--lambda', '0:1:0.5', '--seed', '1', '--regime', 'default',
                          '--plans', '4', '--max-iterations', '3'])
        assert code == 0
        metrics = pd.read_csv(os.path.join(out, 'exp1', 'exp1_metrics.csv'))
        assert set(metrics.loc[metrics['strategy'] == 'mera', 'lambda']) == {0.0, 0.5, 1.0}

    def test_run_rejects_lambda_outside_unit_interval(self, scenario_dir, tmp_path):
        code = main.main(['--no-log-file', 'run', '--suite', 'exp1', '--scenario', scenario_dir,
                          '--out', str(tmp_path), '--rounds', '3', '--lambda', '1.5'])
        assert code == 1
