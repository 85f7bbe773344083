# stdlib imports
import json
import logging

# third party imports
import meshio
import numpy as np
import pandas as pd

# local imports
from dfmheat.utils.exception import DFMException
from dfmheat.utils.units import seconds_to_years

CELL_TYPES = {2: 'line', 3: 'triangle', 4: 'quad'}
CSV_COLUMNS = ['time_years', 'T_production_C', 'epsilon']


def write_vtk(path, grid, fields=None):
    """Write the grid and per-cell fields as a legacy ASCII VTK file.

    Matrix cells become quads or triangles and fracture cells lines, so the
    file can be opened directly in ParaView.

    :param path:
      Output file name (.vtk).
    :param grid:
      FineGrid with node coordinates.
    :param fields:
      Dict name -> per-cell array; None or {} writes geometry only.
    :raises:
      DFMException if a field length does not match the cell count or the
      grid has no node coordinates.
    """
    fields = fields or {}
    if grid.node_coords is None:
        raise DFMException('Grid has no node coordinates; cannot write VTK.')
    for name, values in fields.items():
        if len(values) != grid.cell_count:
            raise DFMException('Field %s has %i values for %i cells.'
                               % (name, len(values), grid.cell_count))
    counts = np.diff(grid.nodes_indptr)
    unknown = set(np.unique(counts)) - set(CELL_TYPES)
    if unknown:
        raise DFMException('Cells with %s nodes cannot be written to VTK.' % sorted(unknown))
    blocks = []
    order = []
    for count in sorted(set(counts), key=lambda c: np.argmax(counts == c)):
        cells = np.nonzero(counts == count)[0]
        conn = np.vstack([grid.cellNodes(k) for k in cells])
        blocks.append(meshio.CellBlock(CELL_TYPES[count], conn))
        order.append(cells)
    points = np.hstack([grid.node_coords, np.zeros((len(grid.node_coords), 1))])
    cell_data = {'cell_index': [cells for cells in order],
                 'kind': [grid.kind[cells] for cells in order]}
    for name, values in fields.items():
        values = np.asarray(values, dtype=float)
        cell_data[name] = [values[cells] for cells in order]
    mesh = meshio.Mesh(points, blocks, cell_data=cell_data)
    meshio.write(path, mesh, file_format='vtk', binary=False)
    logging.info('Wrote %s (%i cells, %i fields)' % (path, grid.cell_count, len(fields)))


def write_csv(path, times, production, epsilon=None):
    """Write a time series table with 17 significant digits.

    :param times:
      Times in s (written in years).
    :param production:
      Production temperature (C) per time.
    :param epsilon:
      Optional energy error per time; NaN when omitted.
    """
    times = np.asarray(times, dtype=float)
    production = np.asarray(production, dtype=float)
    if epsilon is None:
        epsilon = np.full(len(times), np.nan)
    epsilon = np.asarray(epsilon, dtype=float)
    if not len(times) == len(production) == len(epsilon):
        raise DFMException('Time series columns have different lengths.')
    frame = pd.DataFrame({'time_years': seconds_to_years(times),
                          'T_production_C': production,
                          'epsilon': epsilon}, columns=CSV_COLUMNS)
    frame.to_csv(path, index=False, float_format='%.17g')


def read_csv(path):
    return pd.read_csv(path)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_summary(path, summary):
    """Write a summary dict as JSON with sorted keys; NaN becomes null."""
    with open(path, 'wt') as f:
        json.dump(_jsonable(summary), f, sort_keys=True, indent=2)
        f.write('\n')
