#!/usr/bin/env python

# third party imports
import numpy as np
import pytest

# local imports
from dfmheat.models.flow import (PRESSURE, FlowProps, Well, WellSet, assemble_pressure,
                                 compute_fluxes, half_transmissibility, solve_pressure,
                                 boundary_transmissibilities, cubic_law, solve_flow,
                                 transmissibilities)
from dfmheat.models.grid import FractureNetwork, build_cartesian_dfm
from dfmheat.utils.exception import DFMException, GridException, SolverException

EMPTY = FractureNetwork(np.zeros((0, 2, 2)), [])


def chain(n=3):
    return build_cartesian_dfm((0, n, 0, 1), n, 1, EMPTY)


def test_cubic_law():
    np.testing.assert_allclose(cubic_law(1e-3), 1e-6 / 12)
    np.testing.assert_allclose(cubic_law([0.0, 0.12]), [0.0, 0.0012])


def test_dirichlet_chain():
    print('Testing a three cell chain between fixed pressures...')
    grid = chain()
    props = FlowProps(1.0, 1.0)
    p, flux = solve_flow(grid, props, WellSet([]), bcs={'left': 1.0, 'right': 0.0})
    np.testing.assert_allclose(p, [5 / 6, 1 / 2, 1 / 6], atol=1e-12)
    np.testing.assert_allclose(flux.conn_flux, [1 / 3, 1 / 3], atol=1e-12)
    left = grid.bnd_tag == 'left'
    right = grid.bnd_tag == 'right'
    np.testing.assert_allclose(flux.bnd_flux[left], -1 / 3, atol=1e-12)
    np.testing.assert_allclose(flux.bnd_flux[right], 1 / 3, atol=1e-12)
    np.testing.assert_allclose(flux.bnd_flux[~(left | right)], 0.0)
    np.testing.assert_allclose(boundary_transmissibilities(grid, 1.0)[left], 2.0)
    np.testing.assert_allclose(flux.massBalance(grid), 0.0, atol=1e-12)
    print('Passed three cell chain between fixed pressures.')


def test_pressure_wells():
    print('Testing bottom-pressure wells...')
    grid = chain()
    wells = WellSet([Well('inj', [0], kind=PRESSURE, pressure=1.0, index=1.0),
                     Well('prod', [2], kind=PRESSURE, pressure=0.0, index=1.0)])
    p, flux = solve_flow(grid, FlowProps(1.0, 1.0), wells)
    np.testing.assert_allclose(p, [0.75, 0.5, 0.25], atol=1e-12)
    np.testing.assert_allclose(flux.well_flux, [0.25, 0.0, -0.25], atol=1e-12)
    np.testing.assert_array_equal(flux.injectorCells(), [0])
    np.testing.assert_array_equal(flux.producerCells(), [2])
    print('Passed bottom-pressure wells.')


def test_neumann_wells():
    print('Testing a no-flow problem driven by rate wells...')
    network = FractureNetwork([[[0, 2], [4, 2]]], [1e-3])
    grid = build_cartesian_dfm((0, 4, 0, 4), 4, 4, network)
    wells = WellSet([Well('inj', [0], rate=1e-3), Well('prod', [15], rate=-1e-3)])
    props = FlowProps(1e-13, 1e-3)
    p, flux = solve_flow(grid, props, wells)
    np.testing.assert_allclose(p.mean(), 0.0, atol=1e-9 * np.abs(p).max())
    np.testing.assert_allclose(flux.massBalance(grid), 0.0, atol=1e-12)
    assert p[0] > p[15]

    # a rate well split over tied cells
    split = WellSet([Well('inj', [0, 1], rate=2.0), Well('prod', [15], rate=-2.0)])
    np.testing.assert_allclose(split.rateSources(grid.cell_count)[[0, 1, 15]],
                               [1.0, 1.0, -2.0])

    unbalanced = WellSet([Well('inj', [0], rate=1e-3), Well('prod', [15], rate=-2e-3)])
    with pytest.raises(SolverException):
        assemble_pressure(grid, props, unbalanced)
    # a fixed boundary pressure absorbs the imbalance
    p, flux = solve_flow(grid, props, unbalanced, bcs={'left': 0.0})
    np.testing.assert_allclose(flux.massBalance(grid), 0.0, atol=1e-12)
    print('Passed no-flow problem driven by rate wells.')


def test_star_delta():
    print('Testing star-delta transmissibilities at a crossing...')
    aperture = 1e-3
    network = FractureNetwork([[[0, 2], [4, 2]], [[2, 0], [2, 4]]], [aperture, aperture])
    grid = build_cartesian_dfm((0, 4, 0, 4), 4, 4, network)
    perm = FlowProps(1e-13, 1.0).permeability(grid)
    trans = transmissibilities(grid, perm)
    alpha = aperture * cubic_law(aperture) / 0.5
    star = grid.conn_star >= 0
    np.testing.assert_allclose(trans[star], alpha / 4)
    # an ordinary two-cell fracture junction is the harmonic mean
    along = grid.alongFracture() & ~star
    np.testing.assert_allclose(trans[along], alpha / 2)
    print('Passed star-delta transmissibilities at a crossing.')


def test_bad_inputs():
    with pytest.raises(DFMException):
        FlowProps(0.0, 1e-3)
    with pytest.raises(DFMException):
        FlowProps(1e-13, 0.0)
    with pytest.raises(DFMException):
        Well('w', [], rate=1.0)
    with pytest.raises(DFMException):
        Well('w', [0], kind=PRESSURE)
    with pytest.raises(DFMException):
        Well('w', [0], kind='choke')
    with pytest.raises(DFMException):
        solve_flow(chain(), FlowProps(1.0, 1.0), WellSet([]), bcs={'north': 1.0})


def test_separate_steps():
    grid = chain()
    assert half_transmissibility(grid, 0, 0, 1.0) == 2.0
    assert half_transmissibility(grid, 1, 0, 3.0) == 6.0
    with pytest.raises(GridException):
        half_transmissibility(grid, 2, 0, 1.0)

    props = FlowProps(1.0, 1.0)
    bcs = {'left': 1.0, 'right': 0.0}
    A, q = assemble_pressure(grid, props, WellSet([]), bcs)
    p = solve_pressure(A, q)
    flux = compute_fluxes(grid, props, p, None, bcs)
    expected, reference = solve_flow(grid, props, WellSet([]), bcs)
    np.testing.assert_allclose(p, expected, atol=1e-14)
    np.testing.assert_allclose(flux.conn_flux, reference.conn_flux, atol=1e-14)
    np.testing.assert_allclose(flux.well_flux, 0.0)


if __name__ == '__main__':
    test_cubic_law()
    test_dirichlet_chain()
    test_pressure_wells()
    test_neumann_wells()
    test_star_delta()
    test_bad_inputs()
    test_separate_steps()
