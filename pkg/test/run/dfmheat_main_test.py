#!/usr/bin/env python

# stdlib imports
import argparse
import json
import os.path
import shutil
import tempfile

# third party imports
import numpy as np
import pandas as pd
import yaml

# local imports
from dfmheat.io.gridfile import read_labels, read_network
from dfmheat.run.dfmheat_main import (EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main, plan,
                                      run_label)
from dfmheat.run.scenario import load_scenario
from dfmheat.utils.config import read_config
from dfmheat.utils.datapath import get_scenario_path

TINY_FILES = ['resolved_config.yml', 'partition.txt', 'basis_smoothed.txt',
              'production_fine.csv', 'production_constant.csv', 'production_smoothed.csv',
              'error_constant.csv', 'error_smoothed.csv', 'refinement.csv', 'profile.csv',
              'fields.vtk', 'summary.json', 'run.log']


def run_args(config, outdir, **kwargs):
    args = {'command': 'run', 'config': config, 'outdir': outdir, 'fine_ref': True,
            'basis': None, 'dry_run': False, 'jobs': 1, 'seed': None, 'debug': False}
    args.update(kwargs)
    return argparse.Namespace(**args)


def write_variant(tdir, name, **changes):
    """Copy of the smoke scenario with top-level sections replaced."""
    config = read_config(get_scenario_path('tiny_fracture'))
    config.update(changes)
    fname = os.path.join(tdir, '%s.yml' % name)
    with open(fname, 'wt') as f:
        yaml.safe_dump(config, f)
    return fname


def test_run_tiny():
    print('Testing a complete run of the smoke scenario...')
    tdir = tempfile.mkdtemp()
    try:
        outdir = os.path.join(tdir, 'out')
        assert main(run_args('tiny_fracture', outdir)) == EXIT_OK
        for fname in TINY_FILES:
            assert os.path.isfile(os.path.join(outdir, fname)), fname

        with open(os.path.join(outdir, 'summary.json'), 'rt') as f:
            summary = json.load(f)
        assert summary['scenario'] == 'tiny_fracture'
        assert summary['modes'] == ['constant', 'smoothed']
        case = summary['cases'][0]
        assert case['factor'] == 1
        assert case['mass_balance'] < 1e-12
        assert case['partition']['fine_count'] == 156
        assert set(case['runs']) == {'fine', 'constant', 'smoothed'}
        assert case['runs']['fine']['steps'] == 20
        for mode in ['constant', 'smoothed']:
            entry = case['runs'][mode]
            assert 0 <= entry['epsilon_final'] <= entry['epsilon_max']
            assert entry['energy_audit'] < 1e-9
            assert 19.0 < entry['final_production_C'] < 101.0
        assert len(summary['refinement']) == 1

        labels = read_labels(os.path.join(outdir, 'partition.txt'))
        assert len(labels) == 156
        assert labels.max() + 1 == case['partition']['coarse_count']

        fine = pd.read_csv(os.path.join(outdir, 'production_fine.csv'))
        assert len(fine) == 21
        np.testing.assert_allclose(fine['time_years'].iloc[-1], 1.0)
        np.testing.assert_allclose(fine['T_production_C'].iloc[0], 100.0)
        error = pd.read_csv(os.path.join(outdir, 'error_smoothed.csv'))
        np.testing.assert_allclose(error['time_years'], [0.0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(error['epsilon'].iloc[-1],
                                   case['runs']['smoothed']['epsilon_final'])

        profile = pd.read_csv(os.path.join(outdir, 'profile.csv'))
        assert list(profile.columns) == ['x', 'T_fine', 'T_constant', 'T_smoothed']
        assert len(profile) == 12
        assert (np.diff(profile['x']) > 0).all()

        resolved = read_config(os.path.join(outdir, 'resolved_config.yml'))
        assert resolved['grid']['nx'] == 12
    finally:
        shutil.rmtree(tdir)
    print('Passed a complete run of the smoke scenario.')


def test_deterministic():
    print('Testing repeated and parallel runs give identical summaries...')
    tdir = tempfile.mkdtemp()
    try:
        config = write_variant(tdir, 'refined', refinement=[1, 2],
                               outputs={'vtk': False, 'plots': False})
        texts = []
        for idx, jobs in enumerate([1, 1, 2]):
            outdir = os.path.join(tdir, 'out%i' % idx)
            assert main(run_args(config, outdir, jobs=jobs)) == EXIT_OK
            with open(os.path.join(outdir, 'summary.json'), 'rt') as f:
                texts.append(f.read())
        assert texts[0] == texts[1]
        assert texts[0] == texts[2]
        summary = json.loads(texts[0])
        assert [c['factor'] for c in summary['cases']] == [1, 2]
        # the refined grid inherits the coarse grid of the unrefined one
        coarse = [c['partition']['coarse_count'] for c in summary['cases']]
        assert coarse[0] == coarse[1]
        assert os.path.isfile(os.path.join(tdir, 'out0',
                                           'production_%s.csv' % run_label('smoothed', 2)))
    finally:
        shutil.rmtree(tdir)
    print('Passed repeated and parallel runs give identical summaries.')


def test_exit_codes():
    print('Testing exit codes for bad input and solver failures...')
    tdir = tempfile.mkdtemp()
    try:
        outdir = os.path.join(tdir, 'out')
        missing = os.path.join(tdir, 'missing.yml')
        assert main(run_args(missing, outdir)) == EXIT_CONFIG

        wells = [{'name': 'injector', 'type': 'rate', 'rate': '0.01 dm^2/s',
                  'point': ['5 m', '5 m']},
                 {'name': 'producer', 'type': 'rate', 'rate': '-0.005 dm^2/s',
                  'point': ['115 m', '115 m']}]
        config = write_variant(tdir, 'unbalanced', wells=wells)
        assert main(run_args(config, outdir)) == EXIT_SOLVER

        config = write_variant(tdir, 'bad_unit', schedule={'end_time': '1'})
        assert main(run_args(config, outdir)) == EXIT_CONFIG

        # distance bins that never reach the far field fail inside the coarsening code
        config = write_variant(tdir, 'flat_bins',
                               coarsening={'indicators': ['distance'], 'start_cells': 1e-6,
                                           'ratio': 1.0})
        assert main(run_args(config, outdir)) == EXIT_CONFIG
    finally:
        shutil.rmtree(tdir)
    print('Passed exit codes for bad input and solver failures.')


def test_dry_run(capsys):
    tdir = tempfile.mkdtemp()
    try:
        outdir = os.path.join(tdir, 'out')
        pargs = run_args('cartesian_refinement', outdir, dry_run=True, debug=True,
                         basis='smoothed')
        assert main(pargs) == EXIT_OK
        printed = yaml.safe_load(capsys.readouterr().out)
        assert [c['factor'] for c in printed['cases']] == [1, 2]
        assert printed['cases'][1]['nx'] == 164
        assert printed['cases'][1]['runs'] == ['fine_x2', 'smoothed_x2']
        assert printed['cases'][1]['smoothing'] == {'max_sweeps': 5, 'early_stop': False}
        assert not os.path.isdir(outdir)
    finally:
        shutil.rmtree(tdir)

    scenario = load_scenario('tiny_fracture')
    info = plan(scenario, fine_ref=False)
    assert info['cases'][0]['runs'] == ['constant', 'smoothed']


def test_other_commands():
    tdir = tempfile.mkdtemp()
    try:
        output = os.path.join(tdir, 'network.txt')
        pargs = argparse.Namespace(command='gen-network', spec=get_scenario_path('network_spec'),
                                   output=output, seed=7, debug=False)
        assert main(pargs) == EXIT_OK
        network = read_network(output)
        assert 0 < len(network) <= 200
        assert (network.segments >= -1e-9).all()
        assert (network.segments <= 1000 + 1e-9).all()

        output = os.path.join(tdir, 'labels.txt')
        pargs = argparse.Namespace(command='coarsen', config='tiny_fracture', output=output,
                                   debug=False)
        assert main(pargs) == EXIT_OK
        assert len(read_labels(output)) == 156

        pargs = argparse.Namespace(command='coarsen', config=os.path.join(tdir, 'none.yml'),
                                   output=output, debug=False)
        assert main(pargs) == EXIT_CONFIG
    finally:
        shutil.rmtree(tdir)


if __name__ == '__main__':
    test_run_tiny()
    test_deterministic()
    test_exit_codes()
    test_other_commands()
