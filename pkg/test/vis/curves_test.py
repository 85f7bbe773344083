#!/usr/bin/env python

# stdlib imports
import os.path
import shutil
import tempfile

# third party imports
import numpy as np
import pytest

# local imports
from dfmheat.models.grid import FractureNetwork, build_cartesian_dfm
from dfmheat.models.transport import TransportResult
from dfmheat.utils.exception import DFMException
from dfmheat.utils.units import SECONDS_PER_YEAR
from dfmheat.vis.curves import draw_cell_field, draw_error_curves, draw_production_curves


def fake_result(label, decay):
    times = np.linspace(0, 10, 11) * SECONDS_PER_YEAR
    production = 20.0 + 80.0 * np.exp(-decay * times / SECONDS_PER_YEAR)
    return TransportResult({0.0: np.array([100.0])}, times, production,
                           np.zeros(11), np.zeros(11), 0.0, label)


def test_curves():
    print('Testing production and error plots...')
    tdir = tempfile.mkdtemp()
    try:
        results = {'fine': fake_result('fine', 0.2), 'constant': fake_result('constant', 0.25),
                   'smoothed': fake_result('smoothed', 0.21)}
        fname = os.path.join(tdir, 'production.png')
        assert draw_production_curves(results, fname, title='test') == fname
        assert os.path.getsize(fname) > 0

        times = np.linspace(0, 10, 6) * SECONDS_PER_YEAR
        # zero errors at t=0 are left off the log axis
        errors = {'constant': (times, [0.0, 0.1, 0.08, 0.06, 0.05, 0.04]),
                  'smoothed': (times, [0.0, 0.02, 0.015, 0.01, 0.01, 0.009])}
        fname = os.path.join(tdir, 'error.png')
        draw_error_curves(errors, fname)
        assert os.path.isfile(fname)

        with pytest.raises(DFMException):
            draw_production_curves({}, fname)
        with pytest.raises(DFMException):
            draw_error_curves({}, fname)
    finally:
        shutil.rmtree(tdir)
    print('Passed production and error plots.')


def test_cell_field():
    network = FractureNetwork([[[0.0, 2.0], [4.0, 2.0]]], [1e-3])
    grid = build_cartesian_dfm((0, 4, 0, 4), 4, 4, network)
    tdir = tempfile.mkdtemp()
    try:
        fname = os.path.join(tdir, 'field.png')
        draw_cell_field(grid, grid.center[:, 0], fname, label='x')
        assert os.path.isfile(fname)
        with pytest.raises(DFMException):
            draw_cell_field(grid, np.zeros(3), fname)
    finally:
        shutil.rmtree(tdir)


if __name__ == '__main__':
    test_curves()
    test_cell_field()
