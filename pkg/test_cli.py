"""
Tests for the command-line front end, run configuration and artifact writer
"""

import csv
import json
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from main import cli, run
from src.analyzers.invariant_suite import without_timing
from src.melnikov.integrals import CSV_COLUMNS
from src.reporters.artifact_writer import ArtifactWriter
from src.utils.config import Config
from src.utils.errors import ParameterError
from src.utils.run_config import RunConfig


def _read_csv(path):
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


def test_melnikov_command_writes_table(tmp_path):
    result = CliRunner().invoke(cli, ['--output', str(tmp_path), 'melnikov', '--mode', 'nonresonant',
                                      '--a-min', '6', '--a-max', '6.5', '--points', '2'])
    assert result.exit_code == 0, result.output
    header, rows = _read_csv(tmp_path / 'melnikov.csv')
    assert header == CSV_COLUMNS
    assert len(rows) == 2
    assert float(rows[0][0]) == 6.0 and float(rows[1][0]) == 6.5

    manifest = json.loads((tmp_path / 'manifest.json').read_text())
    assert manifest['run_config']['subcommand'] == 'melnikov'
    assert manifest['artifacts']['melnikov.csv'] == ArtifactWriter.sha256(tmp_path / 'melnikov.csv')
    flags = json.loads((tmp_path / 'melnikov_flags.json').read_text())
    assert len(flags['flags']) == 2


def test_run_config_file_and_flag_precedence(tmp_path):
    config_file = tmp_path / 'run.yaml'
    config_file.write_text(yaml.safe_dump({'a': 6.5, 'points': 7, 'gamma': 0.2}))
    out = tmp_path / 'out'
    result = CliRunner().invoke(cli, ['--config', str(config_file), '--output', str(out),
                                      'homoclinic', '--points', '3'])
    assert result.exit_code == 0, result.output
    header, rows = _read_csv(out / 'homoclinic.csv')
    assert header == ['t', 'n', 're_Q', 'im_Q', 'residual']
    assert len(rows) == 3 * 3
    manifest = json.loads((out / 'manifest.json').read_text())
    assert manifest['run_config']['a'] == 6.5
    assert manifest['run_config']['points'] == 3


def test_simulate_command(tmp_path):
    result = CliRunner().invoke(cli, ['--output', str(tmp_path), 'simulate', '--a', '6', '--noise', '0.1',
                                      '--t1', '0.01', '--samples', '3'])
    assert result.exit_code == 0, result.output
    header, rows = _read_csv(tmp_path / 'trajectory.csv')
    assert header[0] == 't' and len(header) == 7
    assert len(rows) == 3
    header, rows = _read_csv(tmp_path / 'drift.csv')
    assert header == ['quantity', 'max_abs_drift', 'at_time']
    assert [r[0] for r in rows] == ['H0', 'I', 'D', 'Delta(z)']


def test_usage_errors_exit_with_two(tmp_path):
    runner = CliRunner()
    out = ['--output', str(tmp_path)]
    # melnikov needs a perturbation mode
    assert runner.invoke(cli, out + ['melnikov']).exit_code == 2
    assert runner.invoke(cli, out + ['melnikov', '--mode', 'periodic']).exit_code == 2
    assert runner.invoke(cli, out + ['chain', '--mode', 'nonresonant', '--A1', '6']).exit_code == 2
    assert runner.invoke(cli, out + ['homoclinic', '--N', '2']).exit_code == 2
    assert runner.invoke(cli, out + ['homoclinic', '--branch', '0']).exit_code == 2
    # amplitude below the admissible range
    assert runner.invoke(cli, out + ['homoclinic', '--a', '4']).exit_code == 2

    bad = tmp_path / 'bad.yaml'
    bad.write_text(yaml.safe_dump({'amplitude': 6.0}))
    assert runner.invoke(cli, ['--config', str(bad)] + out + ['homoclinic']).exit_code == 2


def _digests(directory, names):
    return {name: ArtifactWriter.sha256(directory / name) for name in names}


def test_runs_are_reproducible(tmp_path):
    digests = []
    for name in ('first', 'second'):
        rc = RunConfig('homoclinic', a=6.2, points=5, output=str(tmp_path / name))
        assert run(rc, Config()) == 0
        digests.append(ArtifactWriter.sha256(tmp_path / name / 'homoclinic.csv'))
    assert digests[0] == digests[1]

    # the manifest records the output path, so repeat runs share a directory
    out = tmp_path / 'repeat'
    digests = []
    for _ in range(2):
        assert run(RunConfig('homoclinic', a=6.2, points=5, output=str(out)), Config()) == 0
        digests.append(_digests(out, ('homoclinic.csv', 'manifest.json')))
    assert digests[0] == digests[1]


def test_verify_artifacts_are_reproducible(tmp_path):
    settings = yaml.safe_load((Path(__file__).parent / 'config.yaml').read_text())
    settings['verify']['checks'] = ['lax_residual', 'bracket_convention']
    settings['logging']['file'] = ''
    config_path = tmp_path / 'config.yaml'
    config_path.write_text(yaml.safe_dump(settings))
    config = Config(str(config_path))

    out = tmp_path / 'verify'
    digests = []
    for _ in range(2):
        assert run(RunConfig('verify', seed=3, output=str(out)), config) == 0
        digests.append(_digests(out, ('verify.json', 'manifest.json')))
    assert digests[0] == digests[1]

    payload = json.loads((out / 'verify.json').read_text())
    assert [c['name'] for c in payload['checks']] == ['lax_residual', 'bracket_convention']
    assert all('elapsed' not in c for c in payload['checks'])
    assert 'elapsed' not in payload['statistics']


def test_timing_stays_out_of_written_results():
    results = {
        'seed': 1,
        'checks': [{'name': 'lax_residual', 'passed': True, 'elapsed': 0.0021}],
        'statistics': {'total': 1, 'passed': 1, 'failed': 0, 'elapsed': 0.002, 'failed_checks': []}
    }
    stripped = without_timing(results)
    assert stripped == {
        'seed': 1,
        'checks': [{'name': 'lax_residual', 'passed': True}],
        'statistics': {'total': 1, 'passed': 1, 'failed': 0, 'failed_checks': []}
    }
    # the in-memory results keep their timing for the table
    assert results['checks'][0]['elapsed'] == 0.0021


def test_resonant_mode_defaults_and_bounds_omega(tmp_path):
    config = Config()
    rc = RunConfig.build('melnikov', config, {}, {'mode': 'resonant'})
    assert rc.omega == float(config.get('lattice.resonant_omega'))
    assert RunConfig.build('chain', config, {'omega': 11.0, 'A1': 10.9, 'A2': 11.1},
                           {'mode': 'resonant'}).omega == 11.0
    assert RunConfig.build('melnikov', config, {}, {'mode': 'nonresonant'}).omega == 0.0
    with pytest.raises(ParameterError):
        RunConfig.build('melnikov', config, {}, {'mode': 'resonant', 'omega': 3.0})
    with pytest.raises(ParameterError):
        RunConfig.build('chain', config, {'omega': 0.0, 'A1': 6.0, 'A2': 6.1}, {'mode': 'resonant'})

    result = CliRunner().invoke(cli, ['--output', str(tmp_path), 'melnikov', '--mode', 'resonant',
                                      '--omega', '2', '--a-min', '6', '--a-max', '6.5'])
    assert result.exit_code == 2


def test_run_config_yaml_round_trip(tmp_path):
    rc = RunConfig('chain', mode='resonant', omega=10.0, epsilon=1e-4, A1=9.99, A2=10.01,
                   coordinate='amplitude', tol=1e-10)
    path = tmp_path / 'chain.yaml'
    rc.to_yaml(str(path))
    assert RunConfig.from_yaml(str(path)) == rc


def test_run_config_validation():
    with pytest.raises(ParameterError):
        RunConfig('plot')
    with pytest.raises(ParameterError):
        RunConfig('simulate', tol=1e-2)
    with pytest.raises(ParameterError):
        RunConfig('melnikov', a_min=8.0, a_max=7.0, mode='nonresonant')
    with pytest.raises(ParameterError):
        RunConfig.from_dict({'subcommand': 'simulate', 'N': 'three'})
    rc = RunConfig.from_dict({'subcommand': 'simulate', 'tol': '1e-10', 'N': '5'})
    assert rc.tol == 1e-10 and rc.N == 5


def test_artifact_writer(tmp_path):
    writer = ArtifactWriter(str(tmp_path / 'artifacts'), precision=6)
    path = writer.write_csv('table.csv', ['x', 'flag'], [[1.0 / 3.0, True]])
    assert path.read_text().splitlines()[1] == '0.333333,True'
    with pytest.raises(ValueError):
        writer.write_csv('broken.csv', ['x', 'y'], [[1.0]])
    writer.write_json('values.json', {'z': 1 + 2j, 'big': np.inf, 'arr': np.arange(2)})
    payload = json.loads((tmp_path / 'artifacts' / 'values.json').read_text())
    assert payload == {'arr': [0, 1], 'big': 'inf', 'z': {'im': 2.0, 're': 1.0}}
    manifest = json.loads(writer.write_manifest({'subcommand': 'verify'}).read_text())
    assert set(manifest['artifacts']) == {'table.csv', 'values.json'}


def test_check_table_format():
    results = {
        'checks': [
            {'name': 'lax_residual', 'passed': True, 'value': 1e-12, 'threshold': 1e-7, 'detail': ''},
            {'name': 'continuum_limit', 'passed': False, 'value': 0.5, 'threshold': 1.0, 'detail': 'slow'},
        ],
        'statistics': {'total': 2, 'passed': 1, 'elapsed': 0.2},
    }
    table = ArtifactWriter.format_check_table(results, color=False)
    assert 'PASS' in table and 'FAIL' in table
    assert 'Total: 1/2 checks passed' in table
