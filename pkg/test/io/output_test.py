#!/usr/bin/env python

# stdlib imports
import json
import os.path
import shutil
import tempfile

# third party imports
import meshio
import numpy as np
import pytest

# local imports
from dfmheat.io.output import read_csv, write_csv, write_summary, write_vtk
from dfmheat.models.grid import FractureNetwork, build_cartesian_dfm
from dfmheat.utils.exception import DFMException
from dfmheat.utils.units import SECONDS_PER_YEAR


def test_vtk():
    print('Testing VTK output of matrix and fracture cells...')
    network = FractureNetwork([[[0.0, 0.5], [1.0, 0.5]]], [0.01])
    grid = build_cartesian_dfm((0, 1, 0, 1), 2, 2, network)
    tdir = tempfile.mkdtemp()
    try:
        fname = os.path.join(tdir, 'fields.vtk')
        temperature = np.arange(grid.cell_count, dtype=float)
        write_vtk(fname, grid, {'T': temperature})
        mesh = meshio.read(fname)
        types = [block.type for block in mesh.cells]
        assert types == ['quad', 'line']
        assert sum(len(block.data) for block in mesh.cells) == grid.cell_count
        values = np.concatenate(mesh.cell_data['T'])
        index = np.concatenate(mesh.cell_data['cell_index']).astype(int)
        np.testing.assert_allclose(values, temperature[index])
        with pytest.raises(DFMException):
            write_vtk(fname, grid, {'T': temperature[:-1]})
    finally:
        shutil.rmtree(tdir)
    print('Passed VTK output of matrix and fracture cells.')


def test_csv():
    print('Testing time series tables...')
    tdir = tempfile.mkdtemp()
    try:
        fname = os.path.join(tdir, 'production.csv')
        times = np.array([0.0, 1.0, 2.0]) * SECONDS_PER_YEAR
        write_csv(fname, times, [100.0, 99.5, 1.0 / 3.0], [0.0, 0.01, 0.02])
        frame = read_csv(fname)
        assert list(frame.columns) == ['time_years', 'T_production_C', 'epsilon']
        np.testing.assert_allclose(frame['time_years'], [0.0, 1.0, 2.0])
        # 17 significant digits survive the round trip
        assert frame['T_production_C'].iloc[2] == 1.0 / 3.0

        write_csv(fname, times, [100.0, 99.5, 99.0])
        assert read_csv(fname)['epsilon'].isnull().all()

        write_csv(fname, [], [])
        with open(fname, 'rt') as f:
            assert f.read().strip() == 'time_years,T_production_C,epsilon'
        with pytest.raises(DFMException):
            write_csv(fname, times, [1.0])
    finally:
        shutil.rmtree(tdir)
    print('Passed time series tables.')


def test_summary():
    tdir = tempfile.mkdtemp()
    try:
        fname = os.path.join(tdir, 'summary.json')
        write_summary(fname, {'b': np.float64(np.nan), 'a': [np.int64(3), (1.5, True)],
                              'c': {'x': np.array([1.0, 2.0])}})
        with open(fname, 'rt') as f:
            text = f.read()
        data = json.loads(text)
        assert data == {'a': [3, [1.5, True]], 'b': None, 'c': {'x': [1.0, 2.0]}}
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    finally:
        shutil.rmtree(tdir)


if __name__ == '__main__':
    test_vtk()
    test_csv()
    test_summary()
