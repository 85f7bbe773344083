#!/usr/bin/env python

# stdlib imports
import os.path
import tempfile
import shutil

# third party imports
import pytest

# local imports
from dfmheat.utils.config import merge_config, read_config, write_config
from dfmheat.utils.datapath import get_data_path, get_scenario_path
from dfmheat.utils.exception import ConfigException


def test_merge_config():
    print('Testing recursive config merging...')
    base = {'material': {'porosity': 0.001, 'viscosity': '1 cP'}, 'seed': 0}
    override = {'material': {'porosity': 0.01}, 'name': 'x'}
    merged = merge_config(base, override)
    assert merged == {'material': {'porosity': 0.01, 'viscosity': '1 cP'},
                      'seed': 0, 'name': 'x'}
    # inputs untouched
    assert base['material']['porosity'] == 0.001
    print('Passed recursive config merging.')


def test_read_write_config():
    tdir = tempfile.mkdtemp()
    try:
        fname = os.path.join(tdir, 'config.yml')
        config = {'name': 'roundtrip', 'schedule': {'end_time': '1 yr'}}
        write_config(config, fname)
        assert read_config(fname)['schedule']['end_time'] == '1 yr'

        with pytest.raises(ConfigException):
            read_config(os.path.join(tdir, 'missing.yml'))

        bad = os.path.join(tdir, 'list.yml')
        with open(bad, 'wt') as f:
            f.write('- 1\n- 2\n')
        with pytest.raises(ConfigException):
            read_config(bad)

        broken = os.path.join(tdir, 'broken.yml')
        with open(broken, 'wt') as f:
            f.write('a: [1, 2\n')
        with pytest.raises(ConfigException):
            read_config(broken)
    finally:
        shutil.rmtree(tdir)


def test_datapath():
    print('Testing bundled scenario lookup...')
    for name in ['cartesian_refinement', 'stochastic_network', 'complex_network',
                 'tiny_fracture']:
        path = get_scenario_path(name)
        assert path is not None and os.path.isfile(path)
    assert get_scenario_path('tiny_fracture.yml') == get_scenario_path('tiny_fracture')
    assert get_scenario_path('no_such_scenario') is None
    assert os.path.isdir(get_data_path('scenarios'))
    print('Passed bundled scenario lookup.')


if __name__ == '__main__':
    test_merge_config()
    test_read_write_config()
    test_datapath()
