#!/usr/bin/env python
"""Text formats for grids, fracture networks, partitions and bases.

A grid file is line oriented::

    DFMGRID 1
    CELLS n          kind cx cy measure aperture
    CONNS m          i j area d_i d_j nx ny [star]
    BOUNDARY b       cell area nx ny tag [d]
    NODES [n]        node ids of each cell, one row per cell
    POINTS p         x y                      (optional)
    FRACTURES f      cell x1 y1 x2 y2         (optional)

Trailing columns in brackets may be left out; boundary distances then
default to half the distance from the cell center to the face and star ids
to -1, and the NODES count defaults to the number of cells.  Records are
checked as they are read, so errors carry the line number.  Blank lines
and lines starting with # are ignored.
"""

# stdlib imports
import os.path

# third party imports
import numpy as np

# local imports
from dfmheat.models.grid import FineGrid, FractureNetwork, INTERSECTION
from dfmheat.utils.exception import GridException

MAGIC = 'DFMGRID'
VERSION = 1
FMT = '%.17g'


def _fmt(values):
    return ' '.join(FMT % v for v in values)


def export_grid(grid, stream):
    """Write a FineGrid to an open text stream or a file name."""
    if isinstance(stream, str):
        with open(stream, 'wt') as f:
            return export_grid(grid, f)
    stream.write('%s %i\n' % (MAGIC, VERSION))
    stream.write('CELLS %i\n' % grid.cell_count)
    for k in range(grid.cell_count):
        stream.write('%i %s\n' % (grid.kind[k], _fmt([grid.center[k, 0], grid.center[k, 1],
                                                      grid.measure[k], grid.aperture[k]])))
    stream.write('CONNS %i\n' % grid.conn_count)
    for c in range(grid.conn_count):
        i, j = grid.conn_cells[c]
        stream.write('%i %i %s %i\n' % (i, j, _fmt([grid.conn_area[c], grid.conn_dist[c, 0],
                                                    grid.conn_dist[c, 1], grid.conn_normal[c, 0],
                                                    grid.conn_normal[c, 1]]),
                                        grid.conn_star[c]))
    stream.write('BOUNDARY %i\n' % len(grid.bnd_cell))
    for b in range(len(grid.bnd_cell)):
        stream.write('%i %s %s %s\n' % (grid.bnd_cell[b],
                                        _fmt([grid.bnd_area[b], grid.bnd_normal[b, 0],
                                              grid.bnd_normal[b, 1]]),
                                        grid.bnd_tag[b], FMT % grid.bnd_dist[b]))
    stream.write('NODES %i\n' % grid.cell_count)
    for k in range(grid.cell_count):
        stream.write(' '.join(str(n) for n in grid.cellNodes(k)) + '\n')
    if grid.node_coords is not None:
        stream.write('POINTS %i\n' % len(grid.node_coords))
        for x, y in grid.node_coords:
            stream.write('%s\n' % _fmt([x, y]))
    if grid.fracture_segments is not None:
        frac = grid.fractureCells()
        stream.write('FRACTURES %i\n' % len(frac))
        for cell, seg in zip(frac, grid.fracture_segments):
            stream.write('%i %s\n' % (cell, _fmt(seg.ravel())))


class _Lines(object):
    """Iterator over meaningful lines that remembers line numbers."""

    def __init__(self, stream):
        self._lines = iter(enumerate(stream, start=1))
        self.lineno = 0
        self._pushed = None

    def next(self):
        if self._pushed is not None:
            item, self._pushed = self._pushed, None
            self.lineno = item[0]
            return item[1]
        for lineno, line in self._lines:
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            self.lineno = lineno
            return line
        return None

    def push(self, line):
        self._pushed = (self.lineno, line)

    def error(self, message, line=None):
        if line is not None:
            message = '%s: "%s"' % (message, line)
        return GridException(message, lineno=self.lineno)


def _header(lines, name, optional=False, bare=False):
    """Count given on a section header.

    With bare=True the count may be left out; None is then returned and
    the caller reads records up to the next section.
    """
    line = lines.next()
    if line is None:
        if optional:
            return None
        raise lines.error('Unexpected end of file, expected %s section' % name)
    parts = line.split()
    if parts[0] != name:
        if optional:
            lines.push(line)
            return None
        raise lines.error('Expected %s section' % name, line)
    if bare and len(parts) == 1:
        return None
    try:
        count = int(parts[1])
    except (IndexError, ValueError):
        raise lines.error('Malformed %s header' % name, line)
    if count < 0:
        raise lines.error('Negative count in %s header' % name, line)
    return count


def _records(lines, count, name, parse, check=None):
    """Parse count rows; check(record) returns an error message or None."""
    records = []
    for _ in range(count):
        line = lines.next()
        if line is None:
            raise lines.error('Unexpected end of file in %s section' % name)
        try:
            record = parse(line.split())
        except (ValueError, IndexError):
            raise lines.error('Malformed %s record' % name, line)
        problem = check(record) if check is not None else None
        if problem:
            raise lines.error('%s in %s record' % (problem, name), line)
        records.append(record)
    return records


def _cell_check(record):
    if not record[3] > 0:
        return 'Non-positive measure %g' % record[3]
    return None


def _index_check(ncells, positions):
    def check(record):
        for k in positions:
            if not 0 <= record[k] < ncells:
                return 'Cell index %i outside 0..%i' % (record[k], ncells - 1)
        return None
    return check


def _conn_check(ncells):
    indices = _index_check(ncells, (0, 1))

    def check(record):
        problem = indices(record)
        if problem:
            return problem
        if not record[2] > 0:
            return 'Non-positive area %g' % record[2]
        if not (record[3] > 0 and record[4] > 0):
            return 'Non-positive center distance'
        return None
    return check


def _bnd_check(ncells):
    indices = _index_check(ncells, (0,))

    def check(record):
        return indices(record) or (None if record[1] > 0
                                   else 'Non-positive area %g' % record[1])
    return check


def _parse_cell(parts):
    if len(parts) != 5:
        raise ValueError()
    return (int(parts[0]), float(parts[1]), float(parts[2]), float(parts[3]), float(parts[4]))


def _parse_conn(parts):
    if len(parts) not in (7, 8):
        raise ValueError()
    star = int(parts[7]) if len(parts) == 8 else -1
    return (int(parts[0]), int(parts[1])) + tuple(float(p) for p in parts[2:7]) + (star,)


def _parse_bnd(parts):
    if len(parts) not in (5, 6):
        raise ValueError()
    dist = float(parts[5]) if len(parts) == 6 else np.nan
    return (int(parts[0]), float(parts[1]), float(parts[2]), float(parts[3]), parts[4], dist)


def import_grid(stream):
    """Read a FineGrid from an open text stream or a file name.

    :raises:
      GridException with the line number for malformed records, and for
      any grid invariant that fails on the loaded data.
    """
    if isinstance(stream, str):
        if not os.path.isfile(stream):
            raise GridException('Grid file %s does not exist.' % stream)
        with open(stream, 'rt') as f:
            return import_grid(f)
    lines = _Lines(stream)
    line = lines.next()
    if line is None or line.split()[:1] != [MAGIC]:
        raise lines.error('Not a %s file' % MAGIC, line)
    try:
        version = int(line.split()[1])
    except (IndexError, ValueError):
        raise lines.error('Missing format version', line)
    if version != VERSION:
        raise lines.error('Unsupported format version %i' % version)

    ncells = _header(lines, 'CELLS')
    cells = _records(lines, ncells, 'CELLS', _parse_cell, _cell_check)
    nconns = _header(lines, 'CONNS')
    conns = _records(lines, nconns, 'CONNS', _parse_conn, _conn_check(ncells))
    nbnd = _header(lines, 'BOUNDARY')
    bnds = _records(lines, nbnd, 'BOUNDARY', _parse_bnd, _bnd_check(ncells))
    nnodes = _header(lines, 'NODES', bare=True)
    if nnodes is None:
        nnodes = ncells
    elif nnodes != ncells:
        raise lines.error('NODES section has %i rows for %i cells' % (nnodes, ncells))
    cell_nodes = _records(lines, nnodes, 'NODES', lambda parts: [int(p) for p in parts])
    npoints = _header(lines, 'POINTS', optional=True)
    points = None
    if npoints is not None:
        points = _records(lines, npoints, 'POINTS', lambda parts: (float(parts[0]), float(parts[1])))
    nfrac = _header(lines, 'FRACTURES', optional=True)
    segments = None
    if nfrac is not None:
        frac = _records(lines, nfrac, 'FRACTURES',
                        lambda parts: (int(parts[0]),) + tuple(float(p) for p in parts[1:5]))
        order = np.argsort([f[0] for f in frac], kind='stable')
        segments = np.array([frac[k][1:] for k in order], dtype=float).reshape(-1, 2, 2)
    trailing = lines.next()
    if trailing is not None:
        raise lines.error('Unexpected content after the last section', trailing)

    cells = np.array(cells, dtype=float).reshape(-1, 5)
    kind = cells[:, 0].astype(np.int64)
    if (kind == INTERSECTION).any():
        raise GridException('Intersection cells are not supported; eliminate them '
                            'with star-delta connections.')
    conns = np.array(conns, dtype=float).reshape(-1, 8)
    index = conns[:, :2].astype(np.int64)
    bnd_cell = np.array([b[0] for b in bnds], dtype=np.int64)
    bnd_dist = np.array([b[5] for b in bnds], dtype=float)
    missing = np.isnan(bnd_dist)
    if missing.any():
        # distance from the center to the face along the normal is unknown; use half
        # the square root of the cell measure as an estimate
        bnd_dist[missing] = 0.5 * np.sqrt(cells[bnd_cell[missing], 3])
    return FineGrid(kind, cells[:, 1:3], cells[:, 3], cells[:, 4],
                    index, conns[:, 2], conns[:, 3:5], conns[:, 5:7],
                    conns[:, 7].astype(np.int64),
                    bnd_cell, [b[1] for b in bnds], [(b[2], b[3]) for b in bnds],
                    bnd_dist, [b[4] for b in bnds], cell_nodes,
                    node_coords=points, fracture_segments=segments,
                    metadata={'mesher': 'import'})


def write_network(network, filename):
    """Write segments as rows "x1 y1 x2 y2 aperture" at 17 significant digits."""
    with open(filename, 'wt') as f:
        f.write('# x1 y1 x2 y2 aperture\n')
        for seg, aperture in zip(network.segments, network.apertures):
            f.write('%s\n' % _fmt(list(seg.ravel()) + [aperture]))


def read_network(filename):
    """Read a fracture network written by write_network."""
    if not os.path.isfile(filename):
        raise GridException('Network file %s does not exist.' % filename)
    rows = []
    with open(filename, 'rt') as f:
        lines = _Lines(f)
        while True:
            line = lines.next()
            if line is None:
                break
            parts = line.split()
            try:
                if len(parts) != 5:
                    raise ValueError()
                rows.append([float(p) for p in parts])
            except ValueError:
                raise lines.error('Expected "x1 y1 x2 y2 aperture"', line)
    rows = np.array(rows, dtype=float).reshape(-1, 5)
    return FractureNetwork(rows[:, :4].reshape(-1, 2, 2), rows[:, 4])


def write_labels(labels, filename):
    """One coarse label per line, in fine cell order."""
    np.savetxt(filename, np.asarray(labels, dtype=np.int64), fmt='%i')


def read_labels(filename):
    if not os.path.isfile(filename):
        raise GridException('Label file %s does not exist.' % filename)
    try:
        return np.atleast_1d(np.loadtxt(filename, dtype=np.int64))
    except ValueError as e:
        raise GridException('Could not read labels from %s: %s' % (filename, str(e)))


def write_basis_triplets(basis, filename):
    """Nonzero prolongation entries as rows "fine coarse weight"."""
    fine, coarse, weight = basis.triplets()
    with open(filename, 'wt') as f:
        f.write('# fine coarse weight\n')
        for i, c, w in zip(fine, coarse, weight):
            f.write('%i %i %s\n' % (i, c, FMT % w))
