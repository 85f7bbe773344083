#!/usr/bin/env python

# stdlib imports
import logging
import warnings

# third party imports
import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

# local imports
from dfmheat.models.grid import FRACTURE
from dfmheat.utils.exception import DFMException, GridException, SolverException

RATE = 'rate'
PRESSURE = 'pressure'
RESIDUAL_TOL = 1e-10


def cubic_law(aperture):
    """Parallel-plate fracture permeability k_f = a^2/12 (m^2)."""
    return np.asarray(aperture, dtype=float) ** 2 / 12.0


class FlowProps(object):
    def __init__(self, matrix_permeability, viscosity):
        """Single-phase flow properties.

        :param matrix_permeability:
          Scalar or per-cell matrix permeability (m^2).  Entries on fracture
          cells are ignored; those follow the cubic law.
        :param viscosity:
          Dynamic viscosity (Pa s).
        """
        self.matrix_permeability = np.asarray(matrix_permeability, dtype=float)
        self.viscosity = float(viscosity)
        if not (self.matrix_permeability > 0).all():
            raise DFMException('Matrix permeability must be positive.')
        if not self.viscosity > 0:
            raise DFMException('Viscosity must be positive.')

    def permeability(self, grid):
        """Per-cell permeability with k_f = a^2/12 on fracture cells."""
        perm = np.broadcast_to(self.matrix_permeability, (grid.cell_count,)).copy()
        frac = grid.kind == FRACTURE
        perm[frac] = cubic_law(grid.aperture[frac])
        return perm


class Well(object):
    def __init__(self, name, cells, kind=RATE, rate=0.0, pressure=None, index=None):
        """A cell-local source or sink.

        :param name:
          Well name used in logs and outputs.
        :param cells:
          Cell indices the well occupies; a rate is split equally among them.
        :param kind:
          RATE (fixed signed volumetric rate, m^2/s, positive injects) or
          PRESSURE (fixed bottom pressure in Pa).
        :param index:
          Optional well index (m^2/(Pa s)) for pressure wells; defaults to the
          summed transmissibility of each well cell.
        """
        self.name = name
        self.cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))
        if not len(self.cells):
            raise DFMException('Well %s occupies no cells.' % name)
        if kind not in (RATE, PRESSURE):
            raise DFMException('Well %s has unknown type "%s".' % (name, kind))
        if kind == PRESSURE and pressure is None:
            raise DFMException('Pressure well %s needs a bottom pressure.' % name)
        self.kind = kind
        self.rate = float(rate)
        self.pressure = pressure
        self.index = index

    def __repr__(self):
        if self.kind == RATE:
            return 'Well(%s, rate=%g m^2/s, %i cells)' % (self.name, self.rate, len(self.cells))
        return 'Well(%s, pressure=%g Pa, %i cells)' % (self.name, self.pressure, len(self.cells))


class WellSet(object):
    def __init__(self, wells):
        self.wells = list(wells)

    def __iter__(self):
        return iter(self.wells)

    def __len__(self):
        return len(self.wells)

    def rateSources(self, ncells):
        """Per-cell signed rate (m^2/s) from rate-controlled wells."""
        q = np.zeros(ncells)
        for well in self.wells:
            if well.kind == RATE:
                np.add.at(q, well.cells, well.rate / len(well.cells))
        return q

    def pressureWells(self):
        return [well for well in self.wells if well.kind == PRESSURE]

    def checkCompatible(self, ncells, pinned):
        """Raise SolverException if a pure-Neumann problem has unbalanced rates."""
        if pinned or self.pressureWells():
            return
        q = self.rateSources(ncells)
        scale = max(np.abs(q).sum(), np.finfo(float).tiny)
        if abs(q.sum()) > 1e-10 * scale:
            raise SolverException('Rate wells sum to %g m^2/s with no-flow boundaries; '
                                  'the pressure problem has no solution.' % q.sum())


class FluxField(object):
    def __init__(self, conn_flux, bnd_flux, well_flux):
        """Darcy fluxes (m^2/s per unit depth).

        :param conn_flux:
          Signed flux per connection, positive from conn_cells[:,0] to conn_cells[:,1].
        :param bnd_flux:
          Outward flux per boundary face.
        :param well_flux:
          Per-cell well flux, positive for injection.
        """
        self.conn_flux = np.asarray(conn_flux, dtype=float)
        self.bnd_flux = np.asarray(bnd_flux, dtype=float)
        self.well_flux = np.asarray(well_flux, dtype=float)

    def massBalance(self, grid):
        """Per-cell residual: sum of outgoing fluxes minus sources."""
        n = grid.cell_count
        i, j = grid.conn_cells.T
        out = (np.bincount(i, weights=self.conn_flux, minlength=n) -
               np.bincount(j, weights=self.conn_flux, minlength=n))
        out += np.bincount(grid.bnd_cell, weights=self.bnd_flux, minlength=n)
        return out - self.well_flux

    def injectorCells(self):
        return np.nonzero(self.well_flux > 0)[0]

    def producerCells(self):
        return np.nonzero(self.well_flux < 0)[0]


def half_transmissibilities(grid, coeff):
    """Half transmissibilities alpha = A*k/d on both sides of every connection.

    Along-fracture connections use each cell's own aperture as interface
    measure.

    :param grid:
      FineGrid.
    :param coeff:
      Per-cell coefficient (permeability, or conductivity).
    :returns:
      Array (m, 2) of half transmissibilities.
    """
    coeff = np.broadcast_to(np.asarray(coeff, dtype=float), (grid.cell_count,))
    if (grid.conn_dist <= 0).any():
        raise GridException('Non-positive center-to-interface distance.')
    area = np.repeat(grid.conn_area[:, None], 2, axis=1)
    along = grid.alongFracture()
    area[along] = grid.aperture[grid.conn_cells[along]]
    return area * coeff[grid.conn_cells] / grid.conn_dist


def half_transmissibility(grid, cell, conn, coeff):
    """Half transmissibility of one cell across one of its connections."""
    i, j = grid.conn_cells[conn]
    if cell not in (i, j):
        raise GridException('Connection %i does not touch cell %i.' % (conn, cell))
    coeff = np.broadcast_to(np.asarray(coeff, dtype=float), (grid.cell_count,))
    side = 0 if cell == i else 1
    d = grid.conn_dist[conn, side]
    if d <= 0:
        raise GridException('Connection %i has non-positive distance %g.' % (conn, d))
    area = grid.conn_area[conn]
    if grid.kind[i] == FRACTURE and grid.kind[j] == FRACTURE:
        area = grid.aperture[cell]
    return area * coeff[cell] / d


def transmissibilities(grid, coeff, scale=1.0):
    """Full transmissibility per connection.

    Ordinary connections combine the half transmissibilities harmonically.
    Connections of an eliminated fracture intersection use the star-delta
    result T_ij = alpha_i alpha_j / sum_k alpha_k over all branches k.

    :param grid:
      FineGrid.
    :param coeff:
      Per-cell coefficient (permeability or conductivity).
    :param scale:
      Multiplier applied to every transmissibility (e.g. 1/viscosity).
    :returns:
      Array of m transmissibilities.
    """
    if not grid.conn_count:
        return np.zeros(0)
    alpha = half_transmissibilities(grid, coeff)
    trans = 1.0 / (1.0 / alpha[:, 0] + 1.0 / alpha[:, 1])
    star = grid.conn_star >= 0
    if star.any():
        sid = grid.conn_star[star]
        ci, cj = grid.conn_cells[star].T
        ai, aj = alpha[star].T
        keys = np.concatenate([np.column_stack([sid, ci]), np.column_stack([sid, cj])])
        values = np.concatenate([ai, aj])
        branches, first = np.unique(keys, axis=0, return_index=True)
        total = np.bincount(branches[:, 0], weights=values[first],
                            minlength=sid.max() + 1)
        trans[star] = ai * aj / total[sid]
    return trans * scale


def boundary_transmissibilities(grid, coeff, scale=1.0):
    """Half-cell transmissibility between each boundary face and its cell."""
    coeff = np.broadcast_to(np.asarray(coeff, dtype=float), (grid.cell_count,))
    if (grid.bnd_dist <= 0).any() or np.isnan(grid.bnd_dist).any():
        raise GridException('Boundary face without a valid center distance.')
    return grid.bnd_area * coeff[grid.bnd_cell] / grid.bnd_dist * scale


def laplacian(ncells, pairs, trans):
    """Assemble the symmetric TPFA graph Laplacian from per-pair transmissibilities."""
    i, j = np.asarray(pairs).T
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    data = np.concatenate([-trans, -trans, trans, trans])
    return sparse.csr_matrix((data, (rows, cols)), shape=(ncells, ncells))


def _dirichlet_faces(grid, bcs):
    if not bcs:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    faces, values = [], []
    for tag, value in sorted(bcs.items()):
        sel = np.nonzero(grid.bnd_tag == tag)[0]
        if not len(sel):
            raise DFMException('No boundary faces carry tag "%s".' % tag)
        faces.append(sel)
        values.append(np.full(len(sel), float(value)))
    return np.concatenate(faces), np.concatenate(values)


def _well_index(grid, trans, well):
    if well.index is not None:
        return np.full(len(well.cells), float(well.index))
    n = grid.cell_count
    i, j = grid.conn_cells.T
    total = np.bincount(i, weights=trans, minlength=n) + np.bincount(j, weights=trans, minlength=n)
    return total[well.cells]


def assemble_pressure(grid, props, wells, bcs=None):
    """Assemble the TPFA pressure system A p = q.

    :param grid:
      FineGrid.
    :param props:
      FlowProps.
    :param wells:
      WellSet of rate and pressure wells.
    :param bcs:
      Optional dict boundary tag -> Dirichlet pressure (Pa); other faces are no-flow.
    :returns:
      (A, q): CSR matrix and right hand side.
    :raises:
      SolverException for a pure-Neumann problem with unbalanced rates.
    """
    n = grid.cell_count
    perm = props.permeability(grid)
    trans = transmissibilities(grid, perm, 1.0 / props.viscosity)
    A = laplacian(n, grid.conn_cells, trans)
    q = wells.rateSources(n)
    diag = np.zeros(n)
    faces, values = _dirichlet_faces(grid, bcs)
    if len(faces):
        tb = boundary_transmissibilities(grid, perm, 1.0 / props.viscosity)[faces]
        cells = grid.bnd_cell[faces]
        np.add.at(diag, cells, tb)
        np.add.at(q, cells, tb * values)
    for well in wells.pressureWells():
        wi = _well_index(grid, trans, well)
        np.add.at(diag, well.cells, wi)
        np.add.at(q, well.cells, wi * well.pressure)
    wells.checkCompatible(n, pinned=len(faces) > 0)
    A = (A + sparse.diags(diag)).tocsr()
    return A, q


def _factorize(A):
    try:
        return splu(sparse.csc_matrix(A))
    except RuntimeError as e:
        diag = A.diagonal()
        raise SolverException('Sparse factorization failed: %s' % str(e),
                              diagnostics={'size': A.shape[0], 'nnz': A.nnz,
                                           'diag_min': float(diag.min()),
                                           'diag_max': float(diag.max())})


def is_pure_neumann(A):
    """True when constants lie in the kernel of A (no pressure anchor)."""
    scale = max(np.abs(A.diagonal()).max(), np.finfo(float).tiny)
    return np.abs(A @ np.ones(A.shape[0])).max() <= 1e-12 * scale


def solve_pressure(A, q):
    """Direct sparse solve of the pressure system.

    Pure-Neumann systems are solved with the first unknown removed and then
    shifted to zero mean.

    :param A:
      Assembled pressure matrix.
    :param q:
      Right hand side.
    :returns:
      Pressure vector (Pa).
    :raises:
      SolverException on factorization failure or a non-finite solution.
    """
    n = A.shape[0]
    q = np.asarray(q, dtype=float)
    neumann = is_pure_neumann(A)
    if neumann:
        if n == 1:
            return np.zeros(1)
        sub = A[1:, 1:]
        lu = _factorize(sub)

        def solve(rhs):
            x = np.zeros(n)
            x[1:] = lu.solve(rhs[1:])
            return x
    else:
        lu = _factorize(A)
        solve = lu.solve
    p = solve(q)
    if not np.isfinite(p).all():
        raise SolverException('Pressure solve produced non-finite values.',
                              diagnostics={'size': n, 'nnz': A.nnz})
    scale = max(np.abs(q).max(), np.finfo(float).tiny)
    residual = np.abs(q - A @ p).max() / scale
    if residual > RESIDUAL_TOL:
        p = p + solve(q - A @ p)
        residual = np.abs(q - A @ p).max() / scale
        if residual > RESIDUAL_TOL:
            warnings.warn('Pressure residual %.3g exceeds %.0e after refinement.'
                          % (residual, RESIDUAL_TOL))
    if neumann:
        p = p - p.mean()
    logging.debug('Pressure solve: n=%i, relative residual %.3g' % (n, residual))
    return p


def compute_fluxes(grid, props, p, wells=None, bcs=None):
    """Darcy fluxes v_ij = T_ij (p_i - p_j) plus boundary and well fluxes.

    :param grid:
      FineGrid.
    :param props:
      FlowProps.
    :param p:
      Pressure solving the assembled system.
    :param wells:
      WellSet used in assembly (None for no wells).
    :param bcs:
      Dirichlet boundary spec used in assembly.
    :returns:
      FluxField.
    """
    n = grid.cell_count
    perm = props.permeability(grid)
    trans = transmissibilities(grid, perm, 1.0 / props.viscosity)
    i, j = grid.conn_cells.T
    conn_flux = trans * (p[i] - p[j])
    bnd_flux = np.zeros(len(grid.bnd_cell))
    faces, values = _dirichlet_faces(grid, bcs)
    if len(faces):
        tb = boundary_transmissibilities(grid, perm, 1.0 / props.viscosity)[faces]
        bnd_flux[faces] = tb * (p[grid.bnd_cell[faces]] - values)
    well_flux = np.zeros(n)
    if wells is not None:
        well_flux = wells.rateSources(n)
        for well in wells.pressureWells():
            wi = _well_index(grid, trans, well)
            np.add.at(well_flux, well.cells, wi * (well.pressure - p[well.cells]))
    return FluxField(conn_flux, bnd_flux, well_flux)


def solve_flow(grid, props, wells, bcs=None):
    """Assemble, solve and post-process the pressure equation.

    :returns:
      (pressure, FluxField)
    """
    A, q = assemble_pressure(grid, props, wells, bcs)
    p = solve_pressure(A, q)
    flux = compute_fluxes(grid, props, p, wells, bcs)
    balance = np.abs(flux.massBalance(grid)).max()
    qmax = max(np.abs(flux.well_flux).max(), np.abs(flux.bnd_flux).max()
               if len(flux.bnd_flux) else 0.0)
    logging.info('Flow solved on %i cells; max mass-balance residual %.3g (max |q| %.3g)'
                 % (grid.cell_count, balance, qmax))
    return p, flux
