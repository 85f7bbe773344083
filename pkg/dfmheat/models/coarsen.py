#!/usr/bin/env python
"""Flow-adapted coarse partitions of a fine DFM grid.

A partition assigns every fine cell a coarse label.  The pipeline bins one
or more indicator fields (time-of-flight, distance to fracture, Cartesian
boxes), takes connected components of each binning, intersects them,
splits coarse cells that mix matrix and fracture cells and finally merges
tiny leftovers into a neighbor.
"""

# stdlib imports
from dataclasses import dataclass, field
import logging

# third party imports
import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.sparse.linalg import spsolve
from scipy.spatial import cKDTree

# local imports
from dfmheat.models.grid import FRACTURE, MATRIX, distance_to_fracture
from dfmheat.models.transport import upwind_operator
from dfmheat.utils.exception import DFMException, GridException, SolverException

MIXED = -1
TOF_CAP = 10.0
FLUX_TOL = 1e-12

TOF = 'tof'
TOF_BACKWARD = 'tof_backward'
DISTANCE = 'distance'
BOX = 'box'
INDICATORS = (TOF, TOF_BACKWARD, DISTANCE, BOX)


class Partition(object):
    def __init__(self, labels, kinds):
        """Coarse partition of a fine grid.

        :param labels:
          Coarse label per fine cell, covering 0..N_c-1.
        :param kinds:
          Per coarse cell MATRIX, FRACTURE or MIXED.
        """
        self.labels = np.asarray(labels, dtype=np.int64)
        self.kinds = np.asarray(kinds, dtype=np.int64)
        self.labels.setflags(write=False)
        self.kinds.setflags(write=False)
        if len(self.labels) and (self.labels.min() < 0 or
                                 self.labels.max() >= len(self.kinds)):
            raise GridException('Partition labels out of range.')

    @classmethod
    def fromLabels(cls, grid, labels):
        """Build a partition from arbitrary integer labels.

        Labels are compacted to 0..N_c-1 in order of first appearance.
        """
        labels = np.asarray(labels)
        if len(labels) != grid.cell_count:
            raise GridException('Got %i labels for %i cells.' % (len(labels), grid.cell_count))
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first)] = np.arange(len(first))
        compact = rank[inverse.ravel()]
        return cls(compact, _coarse_kinds(grid, compact, len(first)))

    @classmethod
    def identity(cls, grid):
        return cls(np.arange(grid.cell_count), grid.kind.copy())

    @property
    def coarse_count(self):
        return len(self.kinds)

    @property
    def sizes(self):
        return np.bincount(self.labels, minlength=self.coarse_count)

    def members(self, coarse):
        return np.nonzero(self.labels == coarse)[0]

    def interfaces(self, grid):
        """Fine connections grouped by coarse interface.

        :returns:
          Tuple (pairs, indptr, conns): pairs (n_i, 2) with k < l sorted
          lexicographically; fine connection indices for interface m are
          conns[indptr[m]:indptr[m+1]], in ascending order.
        """
        ci = self.labels[grid.conn_cells[:, 0]]
        cj = self.labels[grid.conn_cells[:, 1]]
        cross = np.nonzero(ci != cj)[0]
        lo = np.minimum(ci[cross], cj[cross])
        hi = np.maximum(ci[cross], cj[cross])
        key = lo * self.coarse_count + hi
        order = np.argsort(key, kind='stable')
        keys, starts = np.unique(key[order], return_index=True)
        indptr = np.append(starts, len(order)).astype(np.int64)
        pairs = np.column_stack([keys // self.coarse_count, keys % self.coarse_count])
        return pairs.astype(np.int64), indptr, cross[order]

    def __repr__(self):
        return 'Partition(%i fine cells, %i coarse cells)' % (len(self.labels), self.coarse_count)


@dataclass
class IndicatorField:
    """Per-cell indicator values binned into `bins` equal-width classes."""
    values: np.ndarray
    bins: int = 6
    log: bool = True
    name: str = ''

    def binned(self):
        values = np.asarray(self.values, dtype=float)
        if self.bins < 1:
            raise DFMException('Indicator needs at least one bin.')
        if self.log:
            positive = values[values > 0]
            floor = positive.min() if len(positive) else 1.0
            values = np.log10(np.maximum(values, floor))
        lo, hi = values.min(), values.max()
        if not hi > lo:
            return np.zeros(len(values), dtype=np.int64)
        idx = np.floor((values - lo) / (hi - lo) * self.bins).astype(np.int64)
        return np.clip(idx, 0, self.bins - 1)


@dataclass
class CoarseningParams:
    indicators: list = field(default_factory=lambda: [TOF, DISTANCE])
    tof_bins: int = 6
    distance_widths: list = None
    start_cells: float = 2.0
    ratio: float = 2.0
    box_size: tuple = None
    merge_threshold: int = 4

    def __post_init__(self):
        unknown = set(self.indicators) - set(INDICATORS)
        if unknown:
            raise DFMException('Unknown coarsening indicators: %s' % ', '.join(sorted(unknown)))
        if not len(self.indicators):
            raise DFMException('At least one coarsening indicator is required.')
        if BOX in self.indicators and self.box_size is None:
            raise DFMException('The box indicator needs a box size.')


def _coarse_kinds(grid, labels, ncoarse):
    sizes = np.bincount(labels, minlength=ncoarse)
    nfrac = np.bincount(labels, weights=(grid.kind == FRACTURE), minlength=ncoarse)
    kinds = np.full(ncoarse, MIXED, dtype=np.int64)
    kinds[nfrac == 0] = MATRIX
    kinds[nfrac == sizes] = FRACTURE
    return kinds


def _same_label_graph(grid, labels):
    i, j = grid.conn_cells.T
    same = labels[i] == labels[j]
    n = grid.cell_count
    return sparse.csr_matrix((np.ones(same.sum(), dtype=bool), (i[same], j[same])),
                             shape=(n, n))


def check_partition(p, grid):
    """Raise GridException unless p is surjective, pure and connected."""
    if len(p.labels) != grid.cell_count:
        raise GridException('Partition covers %i cells, grid has %i.'
                            % (len(p.labels), grid.cell_count))
    sizes = p.sizes
    if (sizes == 0).any():
        raise GridException('Coarse cells %s are empty.' % np.nonzero(sizes == 0)[0][:10])
    kinds = _coarse_kinds(grid, p.labels, p.coarse_count)
    mixed = np.nonzero(kinds == MIXED)[0]
    if len(mixed):
        raise GridException('Coarse cells %s mix matrix and fracture cells.' % mixed[:10])
    if not np.array_equal(kinds, p.kinds):
        raise GridException('Partition kinds do not match its members.')
    ncomp, comp = connected_components(_same_label_graph(grid, p.labels), directed=False)
    if ncomp != p.coarse_count:
        pieces = np.bincount(p.labels[np.unique(comp, return_index=True)[1]],
                             minlength=p.coarse_count)
        raise GridException('Coarse cells %s are disconnected.' % np.nonzero(pieces > 1)[0][:10])
    return True


def enforce_connected(p, grid):
    """Split every coarse cell into its connected components.

    Components are taken through fine connections between cells of the same
    coarse cell only.
    """
    labels = np.asarray(p.labels if isinstance(p, Partition) else p)
    _, comp = connected_components(_same_label_graph(grid, labels), directed=False)
    return Partition.fromLabels(grid, comp)


def split_hybrid(p, grid):
    """Separate matrix and fracture cells into pure coarse cells."""
    labels = p.labels * 2 + (grid.kind == FRACTURE)
    return enforce_connected(labels, grid)


def intersect_partitions(p1, p2, grid):
    """Nonempty connected intersections of two partitions."""
    if len(p1.labels) != len(p2.labels):
        raise GridException('Cannot intersect partitions of different grids.')
    key = p1.labels * p2.coarse_count + p2.labels
    return enforce_connected(key, grid)


def _tof_graph(grid, conn_flux, tol):
    i, j = grid.conn_cells.T
    fwd = conn_flux > tol
    bwd = conn_flux < -tol
    n = grid.cell_count
    rows = np.concatenate([i[fwd], j[bwd]])
    cols = np.concatenate([j[fwd], i[bwd]])
    return sparse.csr_matrix((np.ones(len(rows), dtype=bool), (rows, cols)), shape=(n, n))


def compute_tof(grid, flux, props, backward=False):
    """Time of flight from injectors (or to producers with backward=True).

    Solves the steady upwind equation sum_out F tau_i - sum_in F tau_j =
    phi_i V_i with tau = 0 in source cells.  Cells the flow never reaches
    get TOF_CAP times the largest swept value.

    :param grid:
      FineGrid.
    :param flux:
      FluxField.
    :param props:
      ThermalProps (porosity).
    :param backward:
      Reverse all fluxes, measuring the time to reach a producer.
    :returns:
      Per-cell time of flight in s.
    :raises:
      SolverException if the solve gives negative or non-finite values.
    """
    sign = -1.0 if backward else 1.0
    conn_flux = sign * flux.conn_flux
    bnd_flux = sign * flux.bnd_flux
    well_flux = sign * flux.well_flux
    n = grid.cell_count
    scale = max(np.abs(conn_flux).max(initial=0.0), np.abs(well_flux).max(initial=0.0))
    tol = FLUX_TOL * scale

    sources = np.nonzero(well_flux > tol)[0]
    inflow = np.unique(grid.bnd_cell[bnd_flux < -tol])
    seeds = np.union1d(sources, inflow)
    if not len(seeds):
        raise SolverException('Time of flight needs at least one injector or inflow boundary.')

    graph = _tof_graph(grid, conn_flux, tol)
    swept = np.zeros(n, dtype=bool)
    for seed in seeds:
        if not swept[seed]:
            order = breadth_first_order(graph, seed, directed=True, return_predecessors=False)
            swept[order] = True

    cells = np.nonzero(swept)[0]
    local = np.full(n, -1, dtype=np.int64)
    local[cells] = np.arange(len(cells))
    i, j = grid.conn_cells.T
    keep = swept[i] & swept[j]
    sink = np.bincount(grid.bnd_cell, weights=np.maximum(bnd_flux, 0.0), minlength=n)
    sink += np.maximum(-well_flux, 0.0)
    # outflow to unswept cells still leaves the swept system
    out_dropped = (np.bincount(i[~keep], weights=np.maximum(conn_flux[~keep], 0) * swept[i[~keep]],
                               minlength=n) +
                   np.bincount(j[~keep], weights=np.maximum(-conn_flux[~keep], 0) * swept[j[~keep]],
                               minlength=n))
    A = upwind_operator(len(cells), local[grid.conn_cells[keep]], conn_flux[keep],
                        (sink + out_dropped)[cells]).tolil()
    phi = props.porosityField(grid)
    rhs = (phi * grid.measure)[cells]
    for s in local[sources]:
        A.rows[s] = [s]
        A.data[s] = [1.0]
        rhs[s] = 0.0
    tau_swept = np.atleast_1d(spsolve(A.tocsc(), rhs))
    if not np.isfinite(tau_swept).all() or (tau_swept < -1e-9 * np.abs(tau_swept).max()).any():
        raise SolverException('Time of flight solve failed.',
                              diagnostics={'swept': len(cells), 'cells': n})
    tau = np.zeros(n)
    tau[cells] = np.maximum(tau_swept, 0.0)
    unswept = ~swept
    if unswept.any():
        cap = TOF_CAP * tau[cells].max()
        tau[unswept] = cap
        logging.info('Time of flight: %i of %i cells not swept, set to %.4g s'
                     % (unswept.sum(), n, cap))
    return tau


def indicator_partition(grid, indicator, bins=6, log=True):
    """Connected components of equal-width indicator bins.

    :param indicator:
      IndicatorField, or an array of per-cell values.
    """
    if not isinstance(indicator, IndicatorField):
        indicator = IndicatorField(np.asarray(indicator, dtype=float), bins, log)
    if len(indicator.values) != grid.cell_count:
        raise DFMException('Indicator has %i values for %i cells.'
                           % (len(indicator.values), grid.cell_count))
    return enforce_connected(indicator.binned(), grid)


def geometric_widths(grid, distance, start_cells=2.0, ratio=2.0):
    """Distance bin widths growing geometrically away from fractures.

    The first width is start_cells typical matrix cell sizes; widths are
    added until they cover the largest distance.
    """
    if not ratio >= 1 or not start_cells > 0:
        raise DFMException('Distance bins need start_cells > 0 and ratio >= 1.')
    matrix = grid.kind == MATRIX
    size = np.sqrt(np.median(grid.measure[matrix])) if matrix.any() else 1.0
    dmax = distance.max() if len(distance) else 0.0
    widths = [start_cells * size]
    total = widths[0]
    while total <= dmax:
        widths.append(widths[-1] * ratio)
        total += widths[-1]
        if len(widths) > 10000:
            raise DFMException('Distance bins do not grow; increase ratio.')
    return np.array(widths)


def distance_partition(grid, distance, widths):
    """Matrix rings at increasing distance from fractures.

    Matrix cells are binned by the cumulative widths (one final bin beyond
    the last edge); fracture cells get a bin of their own.
    """
    widths = np.asarray(widths, dtype=float)
    if (widths <= 0).any():
        raise DFMException('Distance widths must be positive.')
    edges = np.cumsum(widths)
    bins = np.searchsorted(edges, distance, side='right')
    bins[grid.kind == FRACTURE] = len(edges) + 1
    return enforce_connected(bins, grid)


def _grid_box(grid):
    if 'domain' in grid.metadata:
        xmin, _, ymin, _ = grid.metadata['domain']
        return xmin, ymin
    coords = grid.node_coords if grid.node_coords is not None else grid.center
    return coords[:, 0].min(), coords[:, 1].min()


def box_partition(grid, size):
    """Cartesian blocks of size (sx, sy) in m, split into connected pieces."""
    sx, sy = np.broadcast_to(np.asarray(size, dtype=float), (2,))
    if not (sx > 0 and sy > 0):
        raise DFMException('Box size must be positive.')
    xmin, ymin = _grid_box(grid)
    bi = np.floor((grid.center[:, 0] - xmin) / sx).astype(np.int64)
    bj = np.floor((grid.center[:, 1] - ymin) / sy).astype(np.int64)
    return enforce_connected(bj * (bi.max() + 1) + bi, grid)


class _UnionFind(object):
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def merge_small(p, grid, threshold=4):
    """Merge coarse cells with fewer than threshold fine cells.

    Each small cell joins the like-kind neighbor it shares the most fine
    connections with; ties go to the lowest coarse index.  Passes repeat
    until nothing merges.  threshold 0 disables merging.
    """
    if threshold <= 0:
        return p
    while True:
        sizes = p.sizes
        small = np.nonzero(sizes < threshold)[0]
        if not len(small):
            return p
        pairs, indptr, _ = p.interfaces(grid)
        counts = np.diff(indptr)
        uf = _UnionFind(p.coarse_count)
        merged = 0
        neighbors = {}
        for (k, l), c in zip(pairs, counts):
            if p.kinds[k] == p.kinds[l]:
                neighbors.setdefault(k, []).append((l, c))
                neighbors.setdefault(l, []).append((k, c))
        for k in small:
            candidates = neighbors.get(k)
            if not candidates:
                continue
            target = min(candidates, key=lambda item: (-item[1], item[0]))[0]
            if uf.find(k) != uf.find(target):
                uf.union(k, target)
                merged += 1
        if not merged:
            return p
        roots = np.array([uf.find(k) for k in range(p.coarse_count)])
        p = Partition.fromLabels(grid, roots[p.labels])
        logging.debug('merge_small: merged %i coarse cells, %i remain' % (merged, p.coarse_count))


def build_partition(grid, flux, props, params=None):
    """Flow-adapted partition from the configured indicators.

    :param grid:
      FineGrid.
    :param flux:
      FluxField (needed for time-of-flight indicators).
    :param props:
      ThermalProps.
    :param params:
      CoarseningParams; defaults to forward TOF and distance.
    :returns:
      Valid Partition.
    """
    params = params or CoarseningParams()
    parts = []
    for name in params.indicators:
        if name in (TOF, TOF_BACKWARD):
            tau = compute_tof(grid, flux, props, backward=(name == TOF_BACKWARD))
            part = indicator_partition(grid, IndicatorField(tau, params.tof_bins, True, name))
        elif name == DISTANCE:
            distance = distance_to_fracture(grid)
            widths = params.distance_widths
            if widths is None:
                widths = geometric_widths(grid, distance, params.start_cells, params.ratio)
            part = distance_partition(grid, distance, widths)
        else:
            part = box_partition(grid, params.box_size)
        logging.info('Indicator %s: %i coarse cells' % (name, part.coarse_count))
        parts.append(part)
    partition = parts[0]
    for part in parts[1:]:
        partition = intersect_partitions(partition, part, grid)
    partition = split_hybrid(partition, grid)
    partition = enforce_connected(partition, grid)
    partition = merge_small(partition, grid, params.merge_threshold)
    check_partition(partition, grid)
    stats = partition_stats(partition, grid)
    logging.info('Partition: %i fine -> %i coarse cells (CF %.2f)'
                 % (grid.cell_count, partition.coarse_count, stats['coarsening_factor']))
    return partition


def inherit_partition(reference_grid, reference_partition, grid):
    """Carry a partition of a Cartesian grid over to a refined grid.

    Matrix cells take the label of the reference cell containing their
    center; fracture cells take the label of the nearest reference fracture
    cell.  Both grids must come from the Cartesian builders.
    """
    for g in (reference_grid, grid):
        if not {'nx', 'ny', 'domain'} <= set(g.metadata):
            raise GridException('Partition inheritance needs Cartesian grids.')
    xmin, xmax, ymin, ymax = reference_grid.metadata['domain']
    nx, ny = reference_grid.metadata['nx'], reference_grid.metadata['ny']
    labels = np.empty(grid.cell_count, dtype=np.int64)
    matrix = grid.matrixCells()
    ii = np.floor((grid.center[matrix, 0] - xmin) / (xmax - xmin) * nx).astype(np.int64)
    jj = np.floor((grid.center[matrix, 1] - ymin) / (ymax - ymin) * ny).astype(np.int64)
    ref = np.clip(jj, 0, ny - 1) * nx + np.clip(ii, 0, nx - 1)
    labels[matrix] = reference_partition.labels[ref]
    frac = grid.fractureCells()
    if len(frac):
        ref_frac = reference_grid.fractureCells()
        if not len(ref_frac):
            raise GridException('Reference grid has no fracture cells to inherit from.')
        _, nearest = cKDTree(reference_grid.center[ref_frac]).query(grid.center[frac])
        labels[frac] = reference_partition.labels[ref_frac[nearest]]
    partition = enforce_connected(labels, grid)
    if partition.coarse_count != reference_partition.coarse_count:
        logging.warning('Inherited partition has %i coarse cells, reference has %i.'
                        % (partition.coarse_count, reference_partition.coarse_count))
    check_partition(partition, grid)
    return partition


def partition_stats(p, grid):
    """Summary numbers of a partition, JSON serializable."""
    sizes = p.sizes
    hist = np.bincount(sizes)
    return {
        'fine_count': int(grid.cell_count),
        'coarse_count': int(p.coarse_count),
        'coarsening_factor': float(grid.cell_count) / p.coarse_count,
        'size_min': int(sizes.min()),
        'size_max': int(sizes.max()),
        'size_mean': float(sizes.mean()),
        'size_histogram': {int(s): int(c) for s, c in enumerate(hist) if c},
        'matrix_coarse': int((p.kinds == MATRIX).sum()),
        'fracture_coarse': int((p.kinds == FRACTURE).sum()),
    }
