#!/usr/bin/env python

# third party imports
import numpy as np
import pytest
from scipy import sparse

# local imports
from dfmheat.models.basis import (CONSTANT, SMOOTHED, SmoothingControls, constant_basis,
                                  restriction_matrix, smooth_basis)
from dfmheat.models.coarsen import Partition, box_partition, split_hybrid
from dfmheat.models.flow import FlowProps, Well, WellSet, solve_flow
from dfmheat.models.grid import FractureNetwork, build_cartesian_dfm, locate_cells
from dfmheat.models.transport import (Schedule, ThermalProps, assemble_conduction,
                                      cell_capacity, simulate_fine, sink_flux)
from dfmheat.models.upscaled import (build_coarse_system, coarse_advection,
                                     coarse_conduction, coarse_fluxes, energy_error,
                                     error_series, production_temperature,
                                     prolong_to_fine, simulate_coarse)
from dfmheat.utils.exception import DFMException


def reservoir(n=8, length=8.0):
    network = FractureNetwork([[[0, length / 2], [length, length / 2]],
                               [[length / 2, length / 4], [length / 2, length]]],
                              [1e-3, 1e-3])
    grid = build_cartesian_dfm((0, length, 0, length), n, n, network)
    inj = locate_cells(grid, [[0.6, 0.6]], 'matrix')[0]
    prod = locate_cells(grid, [[length - 0.6, length - 0.6]], 'matrix')[0]
    wells = WellSet([Well('inj', inj, rate=1e-5), Well('prod', prod, rate=-1e-5)])
    _, flux = solve_flow(grid, FlowProps(1e-12, 1e-3), wells)
    return grid, flux, wells


def test_coarse_fluxes():
    print('Testing aggregated interface fluxes...')
    grid, flux, _ = reservoir()
    p = split_hybrid(box_partition(grid, 2.0), grid)
    pairs, net = coarse_fluxes(p, grid, flux)
    assert (pairs[:, 0] < pairs[:, 1]).all()
    expected = {}
    for c, (i, j) in enumerate(grid.conn_cells):
        k, l = p.labels[i], p.labels[j]
        if k == l:
            continue
        sign = 1.0 if k < l else -1.0
        key = (min(k, l), max(k, l))
        expected[key] = expected.get(key, 0.0) + sign * flux.conn_flux[c]
    assert len(expected) == len(pairs)
    for (k, l), value in zip(pairs, net):
        np.testing.assert_allclose(value, expected[(k, l)], rtol=1e-12, atol=1e-20)
    print('Passed aggregated interface fluxes.')


def test_coarse_advection_conservation():
    grid, flux, _ = reservoir()
    props = ThermalProps()
    p = split_hybrid(box_partition(grid, 2.0), grid)
    R = restriction_matrix(p)
    sink = R @ sink_flux(grid, flux)
    for per_face in [False, True]:
        A = coarse_advection(p, grid, flux, props, per_face=per_face, scaled=False)
        np.testing.assert_allclose(np.asarray(A.sum(axis=0)).ravel(),
                                   props.fluid_capacity * sink, atol=1e-9)
        offdiag = A - sparse.diags(A.diagonal())
        assert offdiag.max() <= 0


def test_coarse_conduction():
    print('Testing the Galerkin coarse conduction operator...')
    grid, flux, _ = reservoir()
    p = split_hybrid(box_partition(grid, 2.0), grid)
    A = assemble_conduction(grid, ThermalProps())
    basis = smooth_basis(A, p, grid=grid)
    R = restriction_matrix(p)
    Ac = coarse_conduction(A, R, basis.prolongation, basis)
    assert basis.fallback_rows == 0
    # rollback may have replaced the prolongation
    dense = R.toarray() @ A.toarray() @ basis.prolongation.toarray()
    np.testing.assert_allclose(Ac.toarray(), dense, atol=1e-12 * np.abs(dense).max())
    assert (Ac.diagonal() > 0).all()
    # partition of unity: constants stay in the kernel
    np.testing.assert_allclose(Ac @ np.ones(p.coarse_count), 0.0,
                               atol=1e-10 * np.abs(dense).max())
    print('Passed Galerkin coarse conduction operator.')


def test_conduction_fallback():
    print('Testing the constant-basis fallback for bad diagonals...')
    A = sparse.csr_matrix([[1.0, -1.0], [-1.0, 1.0]])
    R = sparse.csr_matrix(np.eye(2))
    P = sparse.csr_matrix([[0.0, 1.0], [1.0, 0.0]])
    with pytest.warns(UserWarning):
        Ac = coarse_conduction(A, R, P)
    np.testing.assert_allclose(Ac.toarray(), A.toarray())
    print('Passed constant-basis fallback for bad diagonals.')


def test_conduction_rollback():
    print('Testing rollback of a smoothed basis with bad diagonals...')
    grid = build_cartesian_dfm((0, 9, 0, 1), 9, 1, FractureNetwork(np.zeros((0, 2, 2)), []))
    p = Partition.fromLabels(grid, [0, 0, 0, 1, 1, 1, 2, 2, 2])
    A = assemble_conduction(grid, ThermalProps())
    R = restriction_matrix(p)

    def controls(sweeps):
        return SmoothingControls(max_iterations=sweeps, energy_stop=False, residual_tol=0.0)

    basis = smooth_basis(A, p, controls=controls(3), grid=grid)
    twice = smooth_basis(A, p, controls=controls(2), grid=grid)
    rows = np.repeat(np.arange(9), np.diff(basis.regions.indptr))
    cols = basis.regions.indices
    middle = (rows >= 3) & (rows < 6)
    # outer cells weighted on the middle basis and vice versa
    bad = (((cols == 1) & ~middle) | ((cols == 0) & middle)).astype(float)

    basis.weights = bad.copy()
    Ac = coarse_conduction(A, R, basis.prolongation, basis)
    assert basis.rollbacks == 1
    np.testing.assert_allclose(Ac.toarray(), (R @ A @ twice.prolongation).toarray(),
                               atol=1e-12)
    assert (Ac.diagonal() > 0).all()
    assert basis.fallback_rows == 0

    basis.checkpoints.clear()
    basis.weights = bad.copy()
    Ac = coarse_conduction(A, R, basis.prolongation, basis)
    assert basis.rollbacks == 2
    np.testing.assert_allclose(Ac.toarray(), (R @ A @ R.T).toarray(), atol=1e-12)
    assert basis.fallback_rows == 0
    print('Passed rollback of a smoothed basis with bad diagonals.')


def test_identity_degeneracy():
    print('Testing that one coarse cell per fine cell reproduces the fine run...')
    network = FractureNetwork([[[0, 15], [30, 15]]], [1e-3])
    grid = build_cartesian_dfm((0, 30, 0, 30), 30, 30, network)
    wells = WellSet([Well('inj', [0], rate=1e-5), Well('prod', [899], rate=-1e-5)])
    _, flux = solve_flow(grid, FlowProps(1e-12, 1e-3), wells)
    props = ThermalProps()
    schedule = Schedule(2e7, 1e8)
    fine = simulate_fine(grid, flux, props, wells, schedule)
    p = Partition.identity(grid)
    A = assemble_conduction(grid, props)
    cap = cell_capacity(props, grid)
    R = restriction_matrix(p)
    for basis in [constant_basis(p), smooth_basis(A, p, grid=grid)]:
        system = build_coarse_system(grid, p, flux, props, wells, basis)
        coarse = simulate_coarse(system, schedule, props.initial_temperature)
        for t in fine.times:
            np.testing.assert_allclose(coarse.snapshots[t], fine.snapshots[t],
                                       rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(coarse.production, fine.production, rtol=1e-9)
        times, eps = error_series(fine, coarse, cap, R)
        np.testing.assert_array_equal(times, fine.times)
        assert (eps < 1e-9).all()
    print('Passed one coarse cell per fine cell reproduces the fine run.')


def test_coarse_run():
    print('Testing a coarse run on a real partition...')
    grid, flux, wells = reservoir()
    props = ThermalProps()
    p = split_hybrid(box_partition(grid, 2.0), grid)
    A = assemble_conduction(grid, props)
    schedule = Schedule(1e7, 2e8)
    fine = simulate_fine(grid, flux, props, wells, schedule)
    cap = cell_capacity(props, grid)
    for basis in [constant_basis(p), smooth_basis(A, p, grid=grid)]:
        system = build_coarse_system(grid, p, flux, props, wells, basis)
        assert system.provenance['mode'] in (CONSTANT, SMOOTHED)
        assert system.provenance['coarse_count'] == p.coarse_count
        coarse = simulate_coarse(system, schedule, props.initial_temperature)
        assert coarse.label == basis.mode
        assert coarse.info['mode'] == basis.mode
        np.testing.assert_allclose(coarse.production[0], props.initial_temperature)
        np.testing.assert_allclose(system.capacity.sum(), cap.sum(), rtol=1e-12)
        times, eps = error_series(fine, coarse, cap, system.restriction)
        assert eps[0] < 1e-12
        assert (eps >= 0).all() and (eps < 1).all()
    with pytest.raises(DFMException):
        build_coarse_system(grid, p, flux, props, wells,
                            constant_basis(Partition.identity(grid)))
    print('Passed coarse run on a real partition.')


def test_helpers():
    R = sparse.csr_matrix([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(prolong_to_fine([3.0, 4.0], R), [3.0, 3.0, 4.0])
    spread = prolong_to_fine([3.0, 4.0], R, weights=[1.0, 2.0, 5.0])
    np.testing.assert_allclose(spread, [1.0, 2.0, 4.0])
    np.testing.assert_allclose(R @ spread, [3.0, 4.0])

    np.testing.assert_allclose(production_temperature([10.0, 20.0], [0, 1], [1.0, 3.0]), 17.5)
    np.testing.assert_allclose(
        production_temperature([10.0, 20.0], [0, 1, 2], [1.0, 1.0, 2.0], labels=[0, 0, 1]),
        15.0)
    assert np.isnan(production_temperature([10.0], [], []))

    cap = np.array([1.0, 1.0, 2.0])
    np.testing.assert_allclose(energy_error(cap * np.array([3.0, 3.0, 4.0]), [3.0, 4.0],
                                            cap, R), 0.0)
    with pytest.raises(DFMException):
        energy_error(np.zeros(3), [1.0, 1.0], cap, R)


if __name__ == '__main__':
    test_coarse_fluxes()
    test_coarse_advection_conservation()
    test_coarse_conduction()
    test_conduction_fallback()
    test_conduction_rollback()
    test_identity_degeneracy()
    test_coarse_run()
    test_helpers()
