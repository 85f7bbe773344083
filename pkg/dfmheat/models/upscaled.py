#!/usr/bin/env python

# stdlib imports
import logging
import warnings

# third party imports
import numpy as np
from scipy import sparse

# local imports
from dfmheat.models.basis import (CONSTANT, check_diagonal_positivity,
                                  constant_basis, restriction_matrix)
from dfmheat.models.transport import (advection_source, assemble_advection,
                                      assemble_conduction, cell_capacity,
                                      producer_weights, run_schedule, sink_flux,
                                      upwind_operator)
from dfmheat.utils.exception import DFMException


class CoarseSystem(object):
    def __init__(self, partition, advection, conduction, capacity, source,
                 restriction, volumes, producers, provenance=None):
        """Capacity-scaled coarse operators and what is needed to run them.

        :param partition:
          Partition the system was built on.
        :param advection:
          Scaled coarse advection operator (N_c x N_c).
        :param conduction:
          Scaled coarse conduction operator (N_c x N_c).
        :param capacity:
          Coarse heat capacities, sums of fine (rho c_p)_eff V.
        :param source:
          Scaled coarse source vector.
        :param restriction:
          R (N_c x N_f).
        :param volumes:
          Fine cell measures, for volume-weighted initial temperatures.
        :param producers:
          (cells, weights) of fine producer cells.
        :param provenance:
          Dict describing how the operators were built.
        """
        self.partition = partition
        self.advection = sparse.csr_matrix(advection)
        self.conduction = sparse.csr_matrix(conduction)
        self.capacity = np.asarray(capacity, dtype=float)
        self.source = np.asarray(source, dtype=float)
        self.restriction = restriction
        self.volumes = np.asarray(volumes, dtype=float)
        self.producers = producers
        self.provenance = dict(provenance or {})

    @property
    def labels(self):
        return self.partition.labels

    @property
    def coarse_count(self):
        return self.partition.coarse_count

    @property
    def operator(self):
        return (self.advection + self.conduction).tocsr()

    def restrictTemperature(self, fine):
        """Volume-weighted coarse average of a fine temperature field."""
        R = self.restriction
        return (R @ (self.volumes * fine)) / (R @ self.volumes)


def coarse_fluxes(p, grid, flux):
    """Net volume rate across every coarse interface.

    :returns:
      Tuple (pairs, net): pairs (n_i, 2) with k < l as from
      Partition.interfaces, net rate from k to l summed over the member
      fine connections in ascending order.
    """
    pairs, indptr, conns = p.interfaces(grid)
    first = np.repeat(pairs[:, 0], np.diff(indptr))
    sign = np.where(p.labels[grid.conn_cells[conns, 0]] == first, 1.0, -1.0)
    iface = np.repeat(np.arange(len(pairs)), np.diff(indptr))
    net = np.bincount(iface, weights=flux.conn_flux[conns] * sign, minlength=len(pairs))
    return pairs, net


def coarse_advection(p, grid, flux, props, per_face=False, scaled=True):
    """Coarse upwind advection from aggregated fine fluxes.

    By default each coarse interface is upwinded on its net flux.  With
    per_face the fine upwind operator is aggregated instead (R A_adv R^T),
    keeping one upwind decision per fine face.
    """
    R = restriction_matrix(p)
    if per_face:
        A = R @ assemble_advection(grid, flux, props, scaled=False) @ R.T
    else:
        pairs, net = coarse_fluxes(p, grid, flux)
        A = upwind_operator(p.coarse_count, pairs, net, R @ sink_flux(grid, flux))
        A = A * props.fluid_capacity
    if scaled:
        A = sparse.diags(1.0 / (R @ cell_capacity(props, grid))) @ A
    return sparse.csr_matrix(A)


def coarse_conduction(A, R, P, basis=None):
    """Galerkin-type coarse conduction R A P with a diagonal safeguard.

    Rows with a nonpositive diagonal trigger rollback through the basis
    checkpoints, down to the initial basis.  Rows that still fail there, or
    any failing row when no basis is given, take the piecewise-constant
    operator R A R^T with a warning.

    :param A:
      Unscaled fine conduction operator.
    :param R:
      Restriction.
    :param P:
      Prolongation.
    :param basis:
      BasisSet owning P, if rollback is allowed.
    :returns:
      Unscaled coarse operator (CSR).
    """
    Ac = sparse.csr_matrix(R @ A @ P)
    ok, offending = check_diagonal_positivity(Ac)
    while not ok and basis is not None and basis.rollback():
        logging.info('Coarse conduction: %i nonpositive diagonals, rolled back basis'
                     % len(offending))
        Ac = sparse.csr_matrix(R @ A @ basis.prolongation)
        ok, offending = check_diagonal_positivity(Ac)
    if not ok:
        const = sparse.csr_matrix(R @ A @ R.T)
        mask = np.zeros(Ac.shape[0])
        mask[offending] = 1.0
        Ac = (sparse.diags(1.0 - mask) @ Ac + sparse.diags(mask) @ const).tocsr()
        warnings.warn('Coarse conduction rows %s fall back to the constant basis.'
                      % list(offending[:10]))
        if basis is not None:
            basis.fallback_rows = len(offending)
    Ac.eliminate_zeros()
    return Ac


def build_coarse_system(grid, partition, flux, props, wells, basis=None, per_face=False):
    """Assemble the coarse advection-conduction system.

    :param basis:
      BasisSet for conduction; the constant basis if None.
    """
    if basis is None:
        basis = constant_basis(partition)
    if basis.shape != (grid.cell_count, partition.coarse_count):
        raise DFMException('Basis of shape %s does not fit %i fine / %i coarse cells.'
                           % (basis.shape, grid.cell_count, partition.coarse_count))
    R = basis.restriction
    capacity = R @ cell_capacity(props, grid)
    advection = coarse_advection(partition, grid, flux, props, per_face=per_face)
    conduction = coarse_conduction(assemble_conduction(grid, props), R,
                                   basis.prolongation, basis)
    conduction = sparse.diags(1.0 / capacity) @ conduction
    source = (R @ advection_source(grid, flux, props, scaled=False)) / capacity
    provenance = {
        'mode': basis.mode,
        'coarse_count': int(partition.coarse_count),
        'per_face_upwind': bool(per_face),
        'sweeps': max(len(basis.residuals) - 1, 0),
        'max_basis_iterations': int(basis.iterations.max()) if len(basis.iterations) else 0,
        'active_bases': int(basis.active.sum()),
        'rollbacks': int(basis.rollbacks),
        'fallback_rows': int(basis.fallback_rows),
    }
    logging.info('Coarse system (%s): %i cells, %i wells' % (basis.mode, partition.coarse_count,
                                                             len(wells)))
    return CoarseSystem(partition, advection, conduction, capacity, source, R,
                        grid.measure, producer_weights(flux), provenance)


def production_temperature(T, producer_cells, rates, labels=None):
    """Rate-weighted mean temperature of the producer cells.

    :param T:
      Temperature vector, fine or coarse (with labels mapping fine to coarse).
    :param producer_cells:
      Fine producer cell indices.
    :param rates:
      Produced volume rates (positive weights).
    """
    producer_cells = np.asarray(producer_cells, dtype=np.int64)
    rates = np.asarray(rates, dtype=float)
    if not len(producer_cells) or not rates.sum() > 0:
        return np.nan
    idx = producer_cells if labels is None else np.asarray(labels)[producer_cells]
    return float(rates @ np.asarray(T)[idx] / rates.sum())


def simulate_coarse(system, schedule, T0_fine, producers=None):
    """Run the coarse system from the volume-averaged fine initial state.

    :param system:
      CoarseSystem.
    :param schedule:
      Schedule.
    :param T0_fine:
      Fine initial temperature (scalar or per cell).
    :param producers:
      (cells, weights) of fine producer cells; defaults to those of the system.
    :returns:
      TransportResult on coarse vectors.
    """
    T0 = np.broadcast_to(np.asarray(T0_fine, dtype=float), system.volumes.shape)
    initial = system.restrictTemperature(T0)
    cells, weights = producers if producers is not None else system.producers
    labels = system.labels

    def production(temperature):
        return production_temperature(temperature, cells, weights, labels)

    label = system.provenance.get('mode', CONSTANT)
    result = run_schedule(system.operator, system.source, system.capacity, initial,
                          schedule, production, label)
    result.info.update(system.provenance)
    return result


def prolong_to_fine(v, R, weights=None):
    """Inject a coarse vector onto fine cells.

    Without weights each fine cell takes its coarse value (R^T v).  With
    weights an extensive quantity is distributed in proportion to them, so
    fine sums reproduce the coarse values.
    """
    R = sparse.csr_matrix(R)
    fine = R.T @ np.asarray(v, dtype=float)
    if weights is None:
        return fine
    weights = np.asarray(weights, dtype=float)
    totals = R @ weights
    return fine * weights / (R.T @ totals)


def energy_error(e_ref, T_coarse, cap_fine, R):
    """Relative l2 error of fine cell energies rebuilt from coarse temperatures.

    eps = ||cap_f (R^T T_c) - e_ref|| / ||e_ref||, with e_ref = cap_f T_ref.
    """
    e_ref = np.asarray(e_ref, dtype=float)
    norm = np.linalg.norm(e_ref)
    if not norm > 0:
        raise DFMException('Reference energy is zero.')
    e_coarse = cap_fine * prolong_to_fine(T_coarse, R)
    return float(np.linalg.norm(e_coarse - e_ref) / norm)


def error_series(fine_result, coarse_result, cap_fine, R):
    """eps at every snapshot time shared by a fine and a coarse run.

    :returns:
      Tuple (times, eps).
    """
    times = [t for t in fine_result.times if t in coarse_result.snapshots]
    eps = [energy_error(cap_fine * fine_result.snapshots[t], coarse_result.snapshots[t],
                        cap_fine, R) for t in times]
    return np.array(times), np.array(eps)
