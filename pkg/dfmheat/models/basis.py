#!/usr/bin/env python
"""Restriction and prolongation operators for coarse conduction.

Prolongation columns (basis functions) start as the coarse-cell indicator
functions and are smoothed with damped Jacobi iterations on the fine
conduction operator.  Each column is confined to an interaction region and
the columns are rescaled after every sweep to sum to one in each fine cell.
A basis whose discrete energy P_i^T A P_i increases stops updating.
"""

# stdlib imports
from collections import deque
from dataclasses import dataclass
import logging

# third party imports
import numpy as np
from scipy import sparse

# local imports
from dfmheat.models.grid import FRACTURE, MATRIX
from dfmheat.utils.exception import DFMException

CONSTANT = 'constant'
SMOOTHED = 'smoothed'
MODES = (CONSTANT, SMOOTHED)

OMEGA = 2.0 / 3.0
RESIDUAL_TOL = 5e-3
UNITY_TOL = 1e-12


@dataclass(frozen=True)
class Checkpoint:
    """Basis state before a sweep; `history` is the length of energy and residuals."""
    weights: np.ndarray
    iterations: np.ndarray
    active: np.ndarray
    frozen: np.ndarray
    history: int


@dataclass
class SmoothingControls:
    max_iterations: int = 100
    residual_tol: float = RESIDUAL_TOL
    energy_stop: bool = True
    clamp_negative: bool = True
    freeze_all_bases: bool = True
    checkpoint_depth: int = 10

    def __post_init__(self):
        if self.max_iterations < 0:
            raise DFMException('max_iterations must be >= 0.')
        if self.residual_tol < 0:
            raise DFMException('residual_tol must be >= 0.')
        if self.checkpoint_depth < 0:
            raise DFMException('checkpoint_depth must be >= 0.')


class BasisSet(object):
    def __init__(self, restriction, regions, weights, mode, checkpoint_depth=10):
        """Prolongation stored on the fixed interaction-region pattern.

        :param restriction:
          R, CSR N_c x N_f with 0/1 entries.
        :param regions:
          Boolean CSR N_f x N_c; entry (j, i) is set when fine cell j lies in
          the interaction region of coarse cell i.
        :param weights:
          Prolongation values aligned with regions.data.
        :param mode:
          'constant' or 'smoothed'.
        :param checkpoint_depth:
          Number of recent iterates kept for rollback, besides the initial
          basis which is always kept.
        """
        self.restriction = restriction
        self.regions = regions
        self.weights = np.asarray(weights, dtype=float)
        if len(self.weights) != regions.nnz:
            raise DFMException('Basis weights do not match the region pattern.')
        self.mode = mode
        nf, nc = regions.shape
        self.frozen = np.zeros(nf, dtype=bool)
        self.energy = []
        self.iterations = np.zeros(nc, dtype=np.int64)
        self.active = np.zeros(nc, dtype=bool)
        self.residuals = []
        self.checkpoints = deque(maxlen=checkpoint_depth)
        self.initial = None
        self.rollbacks = 0
        self.fallback_rows = 0

    @property
    def shape(self):
        return self.regions.shape

    @property
    def prolongation(self):
        return sparse.csr_matrix((self.weights, self.regions.indices, self.regions.indptr),
                                 shape=self.regions.shape)

    def saveCheckpoint(self):
        state = Checkpoint(self.weights.copy(), self.iterations.copy(), self.active.copy(),
                           self.frozen.copy(), len(self.energy))
        if self.initial is None:
            self.initial = state
        else:
            self.checkpoints.append(state)

    def rollback(self):
        """Go back one checkpoint, and to the initial basis once the recent
        ones are used up.

        Sweep counters, active and frozen flags and the energy and residual
        histories are restored with the weights.

        :returns:
          False when the basis already is at its initial state.
        """
        if self.checkpoints:
            state = self.checkpoints.pop()
        elif self.initial is not None and len(self.energy) > self.initial.history:
            state = self.initial
        else:
            return False
        self.weights = state.weights.copy()
        self.iterations = state.iterations.copy()
        self.active = state.active.copy()
        self.frozen = state.frozen.copy()
        del self.energy[state.history:]
        del self.residuals[state.history:]
        self.rollbacks += 1
        return True

    def unityError(self):
        sums = np.add.reduceat(self.weights, self.regions.indptr[:-1]) \
            if len(self.weights) else np.zeros(self.shape[0])
        return np.abs(sums - 1.0).max() if len(sums) else 0.0

    def triplets(self):
        """(fine, coarse, weight) arrays of the nonzero prolongation entries."""
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.regions.indptr))
        nz = self.weights != 0
        return rows[nz], self.regions.indices[nz], self.weights[nz]


def restriction_matrix(p):
    """R with R[i, j] = 1 iff fine cell j belongs to coarse cell i."""
    nf = len(p.labels)
    return sparse.csr_matrix((np.ones(nf), (p.labels, np.arange(nf))),
                             shape=(p.coarse_count, nf))


def coarse_neighbors(p, grid):
    """Boolean N_c x N_c graph of coarse cells sharing a fine-grid node.

    Two matrix coarse cells only count as neighbors if they share a node
    that no fracture cell touches, so a fracture separates them.  The
    diagonal is always set.
    """
    R = restriction_matrix(p)
    N = grid.nodeIncidence().astype(float)
    CN = ((R @ N) > 0).astype(float)
    fracture_nodes = np.asarray(N[grid.kind == FRACTURE].sum(axis=0)).ravel() > 0
    clean = CN @ sparse.diags((~fracture_nodes).astype(float))
    full = ((CN @ CN.T) > 0).astype(float)
    clean = ((clean @ clean.T) > 0).astype(float)
    mm = sparse.diags((p.kinds == MATRIX).astype(float))
    graph = full - mm @ full @ mm + mm @ clean @ mm + sparse.identity(p.coarse_count)
    graph = sparse.csr_matrix(graph > 0)
    graph.sort_indices()
    return graph


def interaction_regions(p, grid):
    """Boolean N_f x N_c support pattern of the basis functions.

    Column i covers the fine cells of coarse cell i and of its node-sharing
    neighbors.
    """
    graph = coarse_neighbors(p, grid).astype(float)
    R = restriction_matrix(p)
    regions = sparse.csr_matrix((R.T @ graph) > 0)
    regions.sort_indices()
    return regions


def _owner_pattern(p, regions):
    rows = np.repeat(np.arange(regions.shape[0]), np.diff(regions.indptr))
    return rows, regions.indices == p.labels[rows]


def constant_basis(p, checkpoint_depth=10):
    """Piecewise-constant prolongation P = R^T."""
    R = restriction_matrix(p)
    regions = sparse.csr_matrix(R.T > 0)
    regions.sort_indices()
    basis = BasisSet(R, regions, np.ones(regions.nnz), CONSTANT, checkpoint_depth)
    return basis


def basis_energy(A, P):
    """Discrete energy P_i^T A P_i for each column of P (or for a vector)."""
    if sparse.issparse(P):
        return np.asarray(P.multiply(A @ P).sum(axis=0)).ravel()
    P = np.asarray(P, dtype=float)
    return np.einsum('i...,i...->...', P, A @ P)


def _gather(matrix, keys, ncols):
    """Values of a sparse matrix at flat positions row*ncols+col (0 if absent)."""
    coo = matrix.tocoo()
    mkeys = coo.row.astype(np.int64) * ncols + coo.col
    order = np.argsort(mkeys)
    mkeys = mkeys[order]
    values = coo.data[order]
    out = np.zeros(len(keys))
    if not len(mkeys):
        return out
    pos = np.minimum(np.searchsorted(mkeys, keys), len(mkeys) - 1)
    hit = mkeys[pos] == keys
    out[hit] = values[pos[hit]]
    return out


def _rescale(weights, indptr, frozen_entry, owner):
    """Cell-wise rescaling so every row sums to one.

    Non-frozen entries share 1 minus the frozen mass.  Rows whose frozen
    mass reaches one are normalized over frozen entries; rows left without
    weight give the remainder to the owner coarse cell.
    """
    nrows = len(indptr) - 1
    rows = np.repeat(np.arange(nrows), np.diff(indptr))
    fmass = np.bincount(rows, weights=weights * frozen_entry, minlength=nrows)[rows]
    free = np.bincount(rows, weights=weights * ~frozen_entry, minlength=nrows)[rows]
    owner_free = np.bincount(rows, weights=owner & ~frozen_entry, minlength=nrows)[rows] > 0
    out = weights.copy()

    full = fmass >= 1.0
    out[full & frozen_entry] /= fmass[full & frozen_entry]
    out[full & ~frozen_entry] = 0.0

    spread = ~full & (free > 0) & ~frozen_entry
    out[spread] *= (1.0 - fmass[spread]) / free[spread]

    empty = ~full & (free <= 0)
    give = empty & owner_free & ~frozen_entry
    out[give] = np.where(owner[give], 1.0 - fmass[give], 0.0)
    # owner frozen as well: normalize the frozen entries, or start over from the owner
    stuck = empty & ~owner_free
    out[stuck & (fmass > 0) & frozen_entry] /= fmass[stuck & (fmass > 0) & frozen_entry]
    out[stuck & (fmass > 0) & ~frozen_entry] = 0.0
    reset = stuck & (fmass <= 0)
    out[reset] = owner[reset].astype(float)
    return out


def _frozen_entries(basis, rows, cols, terminated, freeze_all):
    if freeze_all:
        return basis.frozen[rows]
    return terminated[cols]


def smooth_basis(A, p, regions=None, omega=OMEGA, controls=None, grid=None):
    """Jacobi-smoothed basis functions.

    Each sweep applies P <- P - omega D^-1 A P to the active columns on
    the region pattern, clamps negative values (optional) and rescales
    rows to a partition of unity.  A basis whose energy rises is
    terminated: its region rows go back to the previous iterate and, with
    freeze_all_bases, those fine cells are frozen for every basis;
    otherwise only the terminated column keeps its values.  The check is
    repeated until no active basis gains energy.  Sweeps stop when
    ||A P||_inf falls below residual_tol times its initial value, when
    max_iterations is reached or when no basis is active.

    :param A:
      Unscaled fine conduction operator (symmetric M-matrix).
    :param p:
      Partition.
    :param regions:
      Boolean N_f x N_c support pattern; computed from grid if None.
    :param omega:
      Relaxation factor in (0, 1].
    :param controls:
      SmoothingControls.
    :param grid:
      FineGrid, needed only when regions is None.
    :returns:
      BasisSet in 'smoothed' mode.
    """
    controls = controls or SmoothingControls()
    if not 0 < omega <= 1:
        raise DFMException('Relaxation factor must lie in (0, 1], got %g.' % omega)
    A = sparse.csr_matrix(A)
    nf, nc = A.shape[0], p.coarse_count
    if len(p.labels) != nf:
        raise DFMException('Operator size %i does not match partition of %i cells.'
                           % (nf, len(p.labels)))
    if nc == nf:
        basis = constant_basis(p, controls.checkpoint_depth)
        basis.mode = SMOOTHED
        logging.info('One coarse cell per fine cell; basis left unsmoothed.')
        return basis
    if regions is None:
        if grid is None:
            raise DFMException('Interaction regions need either regions or grid.')
        regions = interaction_regions(p, grid)
    regions = sparse.csr_matrix(regions, dtype=bool)
    regions.sort_indices()
    if regions.shape != (nf, nc):
        raise DFMException('Region pattern has shape %s, expected %s.'
                           % (regions.shape, (nf, nc)))

    rows, owner = _owner_pattern(p, regions)
    cols = regions.indices
    if np.bincount(rows, weights=owner, minlength=nf).min() < 1:
        raise DFMException('Interaction regions must contain their own coarse cell.')
    keys = rows.astype(np.int64) * nc + cols

    basis = BasisSet(restriction_matrix(p), regions, owner.astype(float), SMOOTHED,
                     controls.checkpoint_depth)
    basis.active[:] = True
    terminated = np.zeros(nc, dtype=bool)
    diag = A.diagonal()
    dinv = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 0.0)

    def evaluate(weights):
        P = sparse.csr_matrix((weights, cols, regions.indptr), shape=(nf, nc))
        AP = A @ P
        ap = _gather(AP, keys, nc)
        energy = np.bincount(cols, weights=weights * ap, minlength=nc)
        residual = abs(AP).sum(axis=1).max() if AP.nnz else 0.0
        return ap, energy, float(residual)

    ap, energy, residual0 = evaluate(basis.weights)
    basis.energy.append(energy)
    basis.residuals.append(residual0)
    if residual0 == 0:
        basis.active[:] = False
        return basis

    iteration = 0
    while iteration < controls.max_iterations and basis.active.any():
        basis.saveCheckpoint()
        old = basis.weights.copy()
        frozen_entry = _frozen_entries(basis, rows, cols, terminated, controls.freeze_all_bases)
        update = basis.active[cols] & ~frozen_entry
        weights = old.copy()
        weights[update] -= omega * dinv[rows[update]] * ap[update]
        if controls.clamp_negative:
            np.maximum(weights, 0.0, out=weights)
        weights = _rescale(weights, regions.indptr, frozen_entry, owner)
        ap_new, energy_new, residual = evaluate(weights)

        if controls.energy_stop:
            while True:
                rising = basis.active & (energy_new > energy)
                if not rising.any():
                    break
                basis.active[rising] = False
                terminated[rising] = True
                revert = np.asarray(regions[:, rising].sum(axis=1)).ravel() > 0
                emask = revert[rows]
                weights[emask] = old[emask]
                if controls.freeze_all_bases:
                    basis.frozen |= revert
                ap_new, energy_new, residual = evaluate(weights)

        basis.weights = weights
        ap, energy = ap_new, energy_new
        basis.iterations[basis.active] += 1
        basis.energy.append(energy)
        basis.residuals.append(residual)
        iteration += 1
        if residual / residual0 < controls.residual_tol:
            break

    if not controls.freeze_all_bases:
        basis.frozen = np.bincount(rows, weights=terminated[cols], minlength=nf) > 0
    logging.info('Basis smoothing: %i sweeps, %i of %i bases still active, '
                 'relative residual %.3g'
                 % (iteration, basis.active.sum(), nc, basis.residuals[-1] / residual0))
    return basis


def check_diagonal_positivity(Ac):
    """Check A_c[i, i] > 0 for every row with a nonzero entry.

    :returns:
      Tuple (ok, offending row indices).
    """
    Ac = sparse.csr_matrix(Ac)
    diag = Ac.diagonal()
    nonzero = np.diff(Ac.indptr) > 0
    if Ac.nnz:
        nonzero &= np.asarray(abs(Ac).sum(axis=1)).ravel() > 0
    offending = np.nonzero((diag <= 0) & nonzero)[0]
    return len(offending) == 0, offending
