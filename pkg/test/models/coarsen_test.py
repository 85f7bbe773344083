#!/usr/bin/env python

# third party imports
import numpy as np
import pytest

# local imports
from dfmheat.models.coarsen import (BOX, DISTANCE, TOF, CoarseningParams, IndicatorField,
                                    Partition, box_partition, build_partition,
                                    check_partition, compute_tof, distance_partition,
                                    enforce_connected, geometric_widths,
                                    indicator_partition, inherit_partition,
                                    intersect_partitions, merge_small, partition_stats,
                                    split_hybrid)
from dfmheat.models.flow import FlowProps, Well, WellSet, solve_flow
from dfmheat.models.grid import (FRACTURE, MATRIX, FractureNetwork, build_cartesian_dfm,
                                 distance_to_fracture)
from dfmheat.models.transport import ThermalProps
from dfmheat.utils.exception import DFMException, GridException

EMPTY = FractureNetwork(np.zeros((0, 2, 2)), [])
MIDLINE = FractureNetwork([[[0.0, 0.5], [1.0, 0.5]]], [0.01])


def chain_flux(producer=2):
    grid = build_cartesian_dfm((0, 3, 0, 1), 3, 1, EMPTY)
    wells = WellSet([Well('inj', [0], rate=1.0), Well('prod', [producer], rate=-1.0)])
    _, flux = solve_flow(grid, FlowProps(1.0, 1.0), wells)
    return grid, flux


def test_from_labels():
    grid = build_cartesian_dfm((0, 4, 0, 1), 4, 1, EMPTY)
    p = Partition.fromLabels(grid, [5, 5, 2, 7])
    np.testing.assert_array_equal(p.labels, [0, 0, 1, 2])
    assert p.coarse_count == 3
    np.testing.assert_array_equal(p.sizes, [2, 1, 1])
    np.testing.assert_array_equal(p.members(0), [0, 1])
    assert (p.kinds == MATRIX).all()
    assert check_partition(p, grid)
    with pytest.raises(GridException):
        Partition.fromLabels(grid, [0, 0, 1])


def test_check_partition():
    print('Testing partition validity checks...')
    grid = build_cartesian_dfm((0, 4, 0, 1), 4, 1, EMPTY)
    with pytest.raises(GridException):
        check_partition(Partition.fromLabels(grid, [0, 1, 0, 1]), grid)
    fixed = enforce_connected(Partition.fromLabels(grid, [0, 1, 0, 1]), grid)
    assert fixed.coarse_count == 4
    assert check_partition(fixed, grid)

    grid = build_cartesian_dfm((0, 1, 0, 1), 2, 2, MIDLINE)
    mixed = Partition.fromLabels(grid, np.zeros(grid.cell_count))
    with pytest.raises(GridException):
        check_partition(mixed, grid)
    print('Passed partition validity checks.')


def test_split_hybrid():
    print('Testing separation of matrix and fracture cells...')
    grid = build_cartesian_dfm((0, 1, 0, 1), 2, 2, MIDLINE)
    p = split_hybrid(Partition.fromLabels(grid, np.zeros(grid.cell_count)), grid)
    # matrix below, matrix above, fracture
    assert p.coarse_count == 3
    assert check_partition(p, grid)
    assert p.labels[0] == p.labels[1]
    assert p.labels[2] == p.labels[3]
    assert p.labels[0] != p.labels[2]
    assert sorted(p.kinds) == [MATRIX, MATRIX, FRACTURE]
    print('Passed separation of matrix and fracture cells.')


def test_intersect():
    print('Testing intersection of two partitions...')
    grid = build_cartesian_dfm((0, 4, 0, 4), 4, 4, EMPTY)
    ii, jj = np.arange(16) % 4, np.arange(16) // 4
    checker = Partition.fromLabels(grid, (ii // 2 + jj // 2) % 2)
    stripes = Partition.fromLabels(grid, ii % 2)
    p = intersect_partitions(checker, stripes, grid)
    assert p.coarse_count == 8
    assert check_partition(p, grid)
    np.testing.assert_array_equal(p.sizes, 2)
    print('Passed intersection of two partitions.')


def test_tof():
    print('Testing time of flight on a chain...')
    grid, flux = chain_flux()
    props = ThermalProps(porosity=0.5)
    np.testing.assert_allclose(compute_tof(grid, flux, props), [0.0, 0.5, 1.0], atol=1e-12)
    np.testing.assert_allclose(compute_tof(grid, flux, props, backward=True),
                               [1.0, 0.5, 0.0], atol=1e-12)

    # a cell beyond the producer is never swept
    grid, flux = chain_flux(producer=1)
    np.testing.assert_allclose(compute_tof(grid, flux, props), [0.0, 0.5, 5.0], atol=1e-12)
    print('Passed time of flight on a chain.')


def test_indicator_bins():
    values = np.array([1.0, 10.0, 100.0, 1000.0])
    np.testing.assert_array_equal(IndicatorField(values, 3, True).binned(), [0, 1, 2, 2])
    np.testing.assert_array_equal(IndicatorField(values, 2, False).binned(), [0, 0, 0, 1])
    np.testing.assert_array_equal(IndicatorField(np.ones(4), 5).binned(), 0)
    with pytest.raises(DFMException):
        IndicatorField(values, 0).binned()

    grid = build_cartesian_dfm((0, 4, 0, 1), 4, 1, EMPTY)
    p = indicator_partition(grid, [1.0, 10.0, 1.0, 1.0], bins=2)
    np.testing.assert_array_equal(p.labels, [0, 1, 2, 2])
    with pytest.raises(DFMException):
        indicator_partition(grid, [1.0, 2.0])


def test_distance_and_box():
    print('Testing distance and box indicators...')
    grid = build_cartesian_dfm((0, 1, 0, 1), 2, 2, MIDLINE)
    distance = distance_to_fracture(grid)
    p = distance_partition(grid, distance, [1.0])
    assert p.coarse_count == 3
    assert check_partition(p, grid)
    with pytest.raises(DFMException):
        distance_partition(grid, distance, [0.0])

    grid = build_cartesian_dfm((0, 4, 0, 4), 4, 4, EMPTY)
    widths = geometric_widths(grid, np.array([0.0, 5.5]), start_cells=2.0, ratio=2.0)
    np.testing.assert_allclose(widths, [2.0, 4.0])
    with pytest.raises(DFMException):
        geometric_widths(grid, np.array([1.0]), ratio=0.5)

    p = box_partition(grid, 2.0)
    assert p.coarse_count == 4
    np.testing.assert_array_equal(p.sizes, 4)
    p = box_partition(grid, (4.0, 1.0))
    assert p.coarse_count == 4
    with pytest.raises(DFMException):
        box_partition(grid, 0.0)
    print('Passed distance and box indicators.')


def test_merge_small():
    print('Testing merging of small coarse cells...')
    grid = build_cartesian_dfm((0, 5, 0, 1), 5, 1, EMPTY)
    p = Partition.fromLabels(grid, [0, 0, 0, 0, 1])
    merged = merge_small(p, grid, threshold=4)
    assert merged.coarse_count == 1
    assert merge_small(p, grid, threshold=0) is p
    assert merge_small(p, grid, threshold=1).coarse_count == 2

    # fracture cells never merge into matrix cells
    grid = build_cartesian_dfm((0, 1, 0, 1), 2, 2, MIDLINE)
    p = split_hybrid(Partition.fromLabels(grid, np.zeros(grid.cell_count)), grid)
    merged = merge_small(p, grid, threshold=10)
    assert merged.coarse_count == 3
    print('Passed merging of small coarse cells.')


def test_build_partition():
    print('Testing the full coarsening pipeline...')
    network = FractureNetwork([[[0, 4], [8, 4]], [[4, 0], [4, 8]]], [1e-3, 1e-3])
    grid = build_cartesian_dfm((0, 8, 0, 8), 8, 8, network)
    wells = WellSet([Well('inj', [0], rate=1e-5), Well('prod', [63], rate=-1e-5)])
    _, flux = solve_flow(grid, FlowProps(1e-12, 1e-3), wells)
    params = CoarseningParams(indicators=[TOF, DISTANCE, BOX], box_size=(4.0, 4.0),
                              merge_threshold=2)
    p = build_partition(grid, flux, ThermalProps(), params)
    assert check_partition(p, grid)
    assert 1 < p.coarse_count < grid.cell_count
    stats = partition_stats(p, grid)
    assert stats['fine_count'] == grid.cell_count
    assert stats['coarse_count'] == p.coarse_count
    assert stats['matrix_coarse'] + stats['fracture_coarse'] == p.coarse_count
    assert stats['size_min'] >= 2
    assert sum(stats['size_histogram'].values()) == p.coarse_count

    with pytest.raises(DFMException):
        CoarseningParams(indicators=['porosity'])
    with pytest.raises(DFMException):
        CoarseningParams(indicators=[BOX])
    with pytest.raises(DFMException):
        CoarseningParams(indicators=[])
    print('Passed full coarsening pipeline.')


def test_inherit_partition():
    print('Testing partition inheritance on a refined grid...')
    coarse_grid = build_cartesian_dfm((0, 1, 0, 1), 2, 2, MIDLINE)
    reference = split_hybrid(Partition.fromLabels(coarse_grid, np.zeros(6)), coarse_grid)
    fine_grid = build_cartesian_dfm((0, 1, 0, 1), 4, 4, MIDLINE)
    p = inherit_partition(coarse_grid, reference, fine_grid)
    assert p.coarse_count == 3
    assert check_partition(p, fine_grid)
    assert (p.kinds[p.labels[fine_grid.fractureCells()]] == FRACTURE).all()
    print('Passed partition inheritance on a refined grid.')


if __name__ == '__main__':
    test_from_labels()
    test_check_partition()
    test_split_hybrid()
    test_intersect()
    test_tof()
    test_indicator_bins()
    test_distance_and_box()
    test_merge_small()
    test_build_partition()
    test_inherit_partition()
