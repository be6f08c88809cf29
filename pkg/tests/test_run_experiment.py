import json
import os

import numpy as np
import pandas as pd
import pytest

import run_experiment
from bg_utils import write_json_report
from bounds import d3_bound_normal
from chaos import chaos_cumulants, read_kernel


def run(tmp_path, *argv):
    return run_experiment.main(list(argv) + ['--output-dir', str(tmp_path)])


def load(tmp_path, name):
    with open(os.path.join(str(tmp_path), name)) as handle:
        return json.load(handle)


def test_cumulants_of_the_laplace_target(tmp_path):
    assert run(tmp_path, 'cumulants', '--bg', '2,1,2,1') == 0
    report = load(tmp_path, 'cumulants_report.json')
    kappa = report['target']['kappa']
    assert [kappa[str(j)] for j in range(1, 7)] == pytest.approx([0.0, 0.5, 0.0, 0.75, 0.0, 3.75])
    assert report['target']['family'] == 'LAPLACE'
    assert report['config']['seed'] == 20240601


def test_cumulants_with_monte_carlo(tmp_path):
    assert run(tmp_path, 'cumulants', '--spectrum=0.5,-0.25', '--mc', '64000', '--seed', '3') == 0
    report = load(tmp_path, 'cumulants_report.json')
    assert report['kernel']['kappa']['2'] == pytest.approx(0.625)
    assert set(report['kernel']['agreement']) == {'2', '3', '4', '5', '6'}
    assert report['config']['seed'] == 3


def test_runs_are_deterministic(tmp_path):
    first, second = tmp_path / 'a', tmp_path / 'b'
    for directory in (first, second):
        assert run(directory, 'cumulants', '--bg', '2,1,3,2', '--mc', '32000', '--seed', '11') == 0
    assert load(first, 'cumulants_report.json')['target']['mc'] == load(second, 'cumulants_report.json')['target']['mc']


def test_missing_kernel_file_is_a_config_error(tmp_path):
    assert run(tmp_path, 'cumulants', '--kernel', str(tmp_path / 'missing.txt')) == 2


def test_cumulants_need_an_input(tmp_path):
    assert run(tmp_path, 'cumulants') == 2


def test_argparse_errors_map_to_config_code(tmp_path):
    assert run_experiment.main(['bound']) == 2
    assert run_experiment.main(['bound', '--variant', 'cauchy']) == 2


def test_invalid_target_is_a_parameter_error(tmp_path):
    assert run(tmp_path, 'stein', '--bg', '0,1,2,1') == 3


def test_inapplicable_bound_exit_code(tmp_path, kernel_file):
    assert run(tmp_path, 'bound', '--variant', 'bg', '--bg', '1,1,1,1', '--kernel', kernel_file) == 4


def test_normal_bound_matches_the_library(tmp_path, kernel_file):
    assert run(tmp_path, 'bound', '--variant', 'normal', '--sigma2', '4', '--kernel', kernel_file) == 0
    report = load(tmp_path, 'bound_report.json')
    expected = d3_bound_normal(chaos_cumulants(read_kernel(kernel_file)), 4.0)
    assert report['bound']['total'] == expected.total
    assert report['bound']['variant'] == 'NORMAL'


def test_homog_bound_for_the_u_statistic(tmp_path):
    code = run(tmp_path, 'bound', '--variant', 'homog', '--ustat', '100', '--innovation', 'rademacher',
               '--bg', '2,1,2,1')
    assert code == 0
    bound = load(tmp_path, 'bound_report.json')['bound']
    assert bound['terms']['invariance'] == pytest.approx(90.0, rel=1e-12)
    assert bound['details']['influence_convention'] == 'worked'
    assert bound['details']['rho'] == 1.0


def test_homog_bound_without_a_target_reports_the_invariance_term(tmp_path):
    code = run(tmp_path, 'bound', '--variant', 'homog', '--ustat', '100', '--innovation', 'rademacher',
               '--mc', '32000')
    assert code == 0
    report = load(tmp_path, 'bound_report.json')
    assert report['bound']['terms'] == {'invariance': pytest.approx(90.0, rel=1e-12)}
    assert report['bound']['details']['target'] is None
    assert report['bound']['details']['max_influence'] == pytest.approx(1.0 / 400.0)
    assert 'mc' not in report


def test_json_reports_accept_numpy_values(tmp_path):
    path = str(tmp_path / 'report.json')
    write_json_report(path, {'count': np.int64(3), 'flag': np.bool_(True), 'values': np.arange(3.0),
                             'nested': [{'x': np.float32(0.5)}], 'z': complex(1.0, -2.0)})
    with open(path) as handle:
        loaded = json.load(handle)
    assert loaded == {'count': 3, 'flag': True, 'values': [0.0, 1.0, 2.0], 'nested': [{'x': 0.5}],
                      'z': {'re': 1.0, 'im': -2.0}}
    with pytest.raises(TypeError):
        write_json_report(str(tmp_path / 'bad.json'), {'s': {1, 2}})


def test_exactly_matching_cumulants_give_zero(tmp_path):
    code = run(tmp_path, 'bound', '--variant', 'decomposed', '--bg', '2,1,2,1',
               '--cumulants', '0,0.5,0,0.75,0,3.75')
    assert code == 0
    assert load(tmp_path, 'bound_report.json')['bound']['total'] == 0.0


def test_bound_with_monte_carlo_bracket(tmp_path, kernel_file):
    code = run(tmp_path, 'bound', '--variant', 'bg', '--bg', '2,1,2,1', '--kernel', kernel_file,
               '--mc', '64000', '--seed', '5')
    assert code == 0
    check = load(tmp_path, 'bound_report.json')['mc']
    assert check['bracket_ok'] is True
    assert check['w1_empirical'] > 0


def test_json_config_overrides_flags(tmp_path):
    config = tmp_path / 'override.json'
    config.write_text(json.dumps({'bg': '3,1,3,1', 'seed': 17}))
    assert run(tmp_path, 'cumulants', '--bg', '2,1,2,1', '--config', str(config)) == 0
    report = load(tmp_path, 'cumulants_report.json')
    assert report['target']['params']['alpha1'] == 3.0
    assert report['config']['seed'] == 17


def test_json_config_rejects_unknown_keys(tmp_path):
    config = tmp_path / 'override.json'
    config.write_text(json.dumps({'colour': 'blue'}))
    assert run(tmp_path, 'cumulants', '--bg', '2,1,2,1', '--config', str(config)) == 2
    config.write_text('[1, 2]')
    assert run(tmp_path, 'cumulants', '--bg', '2,1,2,1', '--config', str(config)) == 2


def test_clt_trajectory_quarters_the_bound(tmp_path):
    assert run(tmp_path, 'converge', '--family', 'clt') == 0
    report = load(tmp_path, 'converge_clt_report.json')
    assert report['summary']['bound_strictly_decreasing'] is True
    bounds = [row['bound'] for row in report['trajectory']]
    for previous, current in zip(bounds, bounds[1:]):
        assert previous / current == pytest.approx(4.0, rel=1e-9)
    frame = pd.read_csv(tmp_path / 'converge_clt.csv')
    assert frame['n_pairs'].tolist() == [1, 4, 16, 64]


def test_ustat_trajectory(tmp_path):
    code = run(tmp_path, 'converge', '--family', 'ustat', '--checkpoints', '10,20,40,80', '--bg', '2,1,2,1')
    assert code == 0
    summary = load(tmp_path, 'converge_ustat_report.json')['summary']
    assert summary['invariance_ratios'] == pytest.approx([2.0, 2.0])


def test_bg_trajectory_approaches_the_target(tmp_path):
    assert run(tmp_path, 'converge', '--family', 'bg', '--checkpoints', '4', '--mc', '0') == 0
    report = load(tmp_path, 'converge_bg_report.json')
    assert report['summary']['bound_strictly_decreasing'] is True
    assert [row['weight'] for row in report['trajectory']] == [1.0, 0.25, 0.0625, 0.015625]
    assert 'w1_empirical' not in report['trajectory'][0]


def test_bg_trajectory_ends_below_five_hundredths(tmp_path):
    assert run(tmp_path, 'converge', '--family', 'bg', '--mc', '32000', '--seed', '3') == 0
    report = load(tmp_path, 'converge_bg_report.json')
    bounds = [row['bound'] for row in report['trajectory']]
    assert len(bounds) == 5
    assert all(current < previous for previous, current in zip(bounds, bounds[1:]))
    assert report['summary']['final_bound'] < 0.05
    assert 'w1_ratio_ok' in report['summary']


@pytest.mark.slow
def test_bg_trajectory_with_default_draws(tmp_path):
    assert run(tmp_path, 'converge', '--family', 'bg') == 0
    report = load(tmp_path, 'converge_bg_report.json')
    assert report['config']['flags']['mc'] == 1_000_000
    summary = report['summary']
    assert summary['w1_ratio'] >= 3.0
    assert summary['w1_ratio_ok'] is True
    assert summary['bracket_ok'] is True


def test_bg_trajectory_checkpoint_count(tmp_path):
    assert run(tmp_path, 'converge', '--family', 'bg', '--checkpoints', '1') == 2


def test_stein_identity_only(tmp_path):
    code = run(tmp_path, 'stein', '--bg', '2,1,2,1', '--identity-only', '--n-samples', '32000', '--seed', '1')
    assert code == 0
    report = load(tmp_path, 'stein_report.json')
    assert len(report['identity']) == 5
    assert 'solver' not in report
    assert os.path.isfile(tmp_path / 'stein_identity.csv')


def test_stein_full_run(tmp_path):
    code = run(tmp_path, 'stein', '--bg', '2,1,2,1', '--n-samples', '32000', '--seed', '1')
    assert code == 0
    report = load(tmp_path, 'stein_report.json')
    assert len(report['solver']) == 10
    assert report['semigroup']['identity']['pass'] is True
    assert report['semigroup']['near_identity']['pass'] is True
    assert report['semigroup']['composition']['pass'] is True
    assert all(row['pass'] for row in report['solver'])
    solutions = pd.read_csv(tmp_path / 'stein_solutions.csv')
    assert solutions.shape == (4096, 11)
