#!/usr/bin/env python

# stdlib imports
from dataclasses import dataclass, field
import logging
import warnings

# third party imports
import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

# local imports
from dfmheat.models.flow import laplacian, transmissibilities
from dfmheat.models.grid import FRACTURE
from dfmheat.utils.exception import DFMException, SolverException

# granite and water
ROCK_CAPACITY = 2170e3     # J/(m^3 K)
FLUID_CAPACITY = 4180e3    # J/(m^3 K)
CONDUCTIVITY = 2.1         # W/(m K)
POROSITY = 0.001
INITIAL_TEMPERATURE = 100.0
INJECTION_TEMPERATURE = 20.0

STEP_TOL = 1e-10
DEFAULT_CFL = 5.0

BDF2 = 'bdf2'
EULER = 'euler'


class ThermalProps(object):
    def __init__(self, rock_capacity=ROCK_CAPACITY, fluid_capacity=FLUID_CAPACITY,
                 porosity=POROSITY, conductivity=CONDUCTIVITY,
                 injection_temperature=INJECTION_TEMPERATURE,
                 initial_temperature=INITIAL_TEMPERATURE,
                 boundary_temperature=None):
        """Thermal properties in local thermal equilibrium.

        :param rock_capacity:
          Rock volumetric heat capacity (J/(m^3 K)).
        :param fluid_capacity:
          Fluid volumetric heat capacity (J/(m^3 K)).
        :param porosity:
          Matrix porosity, scalar or per cell; fracture cells always use 1.
        :param conductivity:
          Effective thermal conductivity C (W/(m K)), constant.
        :param injection_temperature:
          Temperature of injected fluid (degC).
        :param initial_temperature:
          Initial reservoir temperature (degC).
        :param boundary_temperature:
          Temperature of fluid entering through Dirichlet boundaries;
          defaults to the initial temperature.
        """
        self.rock_capacity = float(rock_capacity)
        self.fluid_capacity = float(fluid_capacity)
        self.porosity = np.asarray(porosity, dtype=float)
        self.conductivity = float(conductivity)
        self.injection_temperature = float(injection_temperature)
        self.initial_temperature = float(initial_temperature)
        if boundary_temperature is None:
            boundary_temperature = initial_temperature
        self.boundary_temperature = float(boundary_temperature)
        if self.rock_capacity <= 0 or self.fluid_capacity <= 0:
            raise DFMException('Heat capacities must be positive.')
        if self.conductivity <= 0:
            raise DFMException('Conductivity must be positive.')
        if not ((self.porosity >= 0) & (self.porosity <= 1)).all():
            raise DFMException('Porosity must lie in [0, 1].')

    def porosityField(self, grid):
        phi = np.broadcast_to(self.porosity, (grid.cell_count,)).copy()
        phi[grid.kind == FRACTURE] = 1.0
        return phi


@dataclass
class TransportState:
    temperature: np.ndarray
    time: float = 0.0
    previous: np.ndarray = None
    dt: float = None


@dataclass
class TransportResult:
    """Output of a fixed-step run.

    snapshots maps output time (s) to the temperature vector; the per-step
    series (production temperature, stored energy, produced power) are
    aligned with step_times.
    """
    snapshots: dict
    step_times: np.ndarray
    production: np.ndarray
    energy: np.ndarray
    produced: np.ndarray
    injected: float
    label: str = 'fine'
    info: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array(sorted(self.snapshots))

    @property
    def final(self):
        return self.snapshots[max(self.snapshots)]

    def snapshotAt(self, time):
        times = self.times
        return self.snapshots[times[int(np.argmin(np.abs(times - time)))]]


class Schedule(object):
    def __init__(self, dt, end_time, output_times=None, integrator=BDF2):
        """Fixed-step time schedule.

        :param dt:
          Step size (s); shortened slightly if needed so steps divide end_time.
        :param end_time:
          Final time (s).
        :param output_times:
          Times (s) at which full fields are stored; snapped to steps.  The
          final time is always included.  None stores roughly 30 snapshots.
        :param integrator:
          'bdf2' (default) or 'euler'.
        """
        if not end_time > 0:
            raise DFMException('End time must be positive.')
        if not dt > 0:
            raise DFMException('Time step must be positive.')
        if integrator not in (BDF2, EULER):
            raise DFMException('Unknown integrator "%s".' % integrator)
        nsteps = int(np.ceil(end_time / dt - 1e-9))
        self.nsteps = max(nsteps, 1)
        self.end_time = float(end_time)
        self.dt = self.end_time / self.nsteps
        if abs(self.dt - dt) > 1e-12 * dt:
            logging.info('Time step adjusted from %g s to %g s to reach the end time.'
                         % (dt, self.dt))
        self.integrator = integrator
        self._output_times = output_times
        if output_times is None:
            every = max(1, self.nsteps // 30)
            steps = np.arange(every, self.nsteps + 1, every)
        else:
            steps = np.round(np.asarray(output_times, dtype=float) / self.dt).astype(np.int64)
            steps = np.clip(steps, 0, self.nsteps)
        self.output_steps = np.unique(np.concatenate([[0], steps, [self.nsteps]]))

    @property
    def output_times(self):
        return self.output_steps * self.dt

    def halved(self):
        """Same schedule with half the step size."""
        return Schedule(self.dt / 2, self.end_time, self._output_times, self.integrator)

    @staticmethod
    def default_dt(grid, flux, props, end_time, cfl=DEFAULT_CFL):
        """Step size giving an advective CFL number of about `cfl` on matrix cells.

        Fracture cells hold negligible heat and are left out; the implicit
        integrator is stable there regardless.  The result is clamped to
        [end_time/5000, end_time/50].
        """
        capacity = effective_capacity(props, grid) * grid.measure
        i, j = grid.conn_cells.T
        v = flux.conn_flux
        n = grid.cell_count
        outflow = (np.bincount(i, weights=np.maximum(v, 0), minlength=n) +
                   np.bincount(j, weights=np.maximum(-v, 0), minlength=n))
        outflow += np.maximum(-flux.well_flux, 0)
        rate = props.fluid_capacity * outflow / capacity
        matrix = grid.kind != FRACTURE
        fastest = rate[matrix].max() if matrix.any() else 0.0
        dt = cfl / fastest if fastest > 0 else end_time / 50.0
        return float(np.clip(dt, end_time / 5000.0, end_time / 50.0))


def effective_capacity(props, grid):
    """Per-cell (rho c_p)_eff = phi (rho c_p)_f + (1 - phi) (rho c_p)_r."""
    phi = props.porosityField(grid)
    return phi * props.fluid_capacity + (1.0 - phi) * props.rock_capacity


def cell_capacity(props, grid):
    """Per-cell heat capacity (rho c_p)_eff V (J/K per unit depth)."""
    return effective_capacity(props, grid) * grid.measure


def _check_flux(grid, flux):
    if len(flux.conn_flux) != grid.conn_count or len(flux.bnd_flux) != len(grid.bnd_cell) \
            or len(flux.well_flux) != grid.cell_count:
        raise DFMException('Flux field does not match the grid.')


def sink_flux(grid, flux):
    """Per-cell volume rate leaving through producers and outflow boundary faces."""
    sink = np.bincount(grid.bnd_cell, weights=np.maximum(flux.bnd_flux, 0.0),
                       minlength=grid.cell_count)
    return sink + np.maximum(-flux.well_flux, 0.0)


def upwind_operator(ncells, pairs, conn_flux, sink):
    """First-order upwind operator for unit capacity.

    Row i reads sum_out(F) T_i - sum_in(F) T_upstream + sink_i T_i, so
    columns of interior cells sum to zero.

    :param ncells:
      Number of cells.
    :param pairs:
      (m, 2) connected cell pairs.
    :param conn_flux:
      Volume rate from pairs[:, 0] to pairs[:, 1].
    :param sink:
      Per-cell outflow leaving the system.
    :returns:
      CSR operator.
    """
    i, j = np.asarray(pairs, dtype=np.int64).reshape(-1, 2).T
    fwd = np.maximum(conn_flux, 0.0)
    bwd = np.maximum(-np.asarray(conn_flux), 0.0)
    diag = (np.bincount(i, weights=fwd, minlength=ncells) +
            np.bincount(j, weights=bwd, minlength=ncells) + sink)
    rows = np.concatenate([j, i, np.arange(ncells)])
    cols = np.concatenate([i, j, np.arange(ncells)])
    data = np.concatenate([-fwd, -bwd, diag])
    A = sparse.csr_matrix((data, (rows, cols)), shape=(ncells, ncells))
    A.eliminate_zeros()
    return A


def assemble_advection(grid, flux, props, scaled=True):
    """Upwind advection operator.

    Each connection carries the upwind cell's temperature; producers and
    outflow boundary faces remove energy at the cell temperature.

    :param grid:
      FineGrid.
    :param flux:
      Mass-conservative FluxField.
    :param props:
      ThermalProps.
    :param scaled:
      If True, rows are divided by the cell heat capacity.
    :returns:
      CSR operator.
    """
    _check_flux(grid, flux)
    A = upwind_operator(grid.cell_count, grid.conn_cells, flux.conn_flux,
                        sink_flux(grid, flux)) * props.fluid_capacity
    if scaled:
        A = sparse.diags(1.0 / cell_capacity(props, grid)) @ A
    return A.tocsr()


def advection_source(grid, flux, props, scaled=True):
    """Energy carried in by injectors (at T_inj) and inflow boundary faces."""
    _check_flux(grid, flux)
    n = grid.cell_count
    q = np.maximum(flux.well_flux, 0.0) * props.injection_temperature
    q += np.bincount(grid.bnd_cell, weights=np.maximum(-flux.bnd_flux, 0.0),
                     minlength=n) * props.boundary_temperature
    q = q * props.fluid_capacity
    if scaled:
        q = q / cell_capacity(props, grid)
    return q


def assemble_conduction(grid, props, scaled=False):
    """TPFA conduction operator with constant conductivity C.

    The unscaled operator is a symmetric M-matrix and drives basis
    smoothing; the scaled one feeds time stepping.
    """
    trans = transmissibilities(grid, props.conductivity)
    A = laplacian(grid.cell_count, grid.conn_cells, trans)
    if scaled:
        A = sparse.diags(1.0 / cell_capacity(props, grid)) @ A
    return A.tocsr()


def _solve_checked(lu, matrix, rhs):
    x = lu.solve(rhs)
    scale = max(np.abs(rhs).max(), np.finfo(float).tiny)
    residual = np.abs(rhs - matrix @ x).max() / scale
    if residual > STEP_TOL:
        x = x + lu.solve(rhs - matrix @ x)
        residual = np.abs(rhs - matrix @ x).max() / scale
        if residual > STEP_TOL:
            warnings.warn('Time step residual %.3g exceeds %.0e.' % (residual, STEP_TOL))
    if not np.isfinite(x).all():
        raise SolverException('Time step produced non-finite temperatures.')
    return x


def _factorize(matrix):
    try:
        return splu(sparse.csc_matrix(matrix))
    except RuntimeError as e:
        raise SolverException('Step matrix factorization failed: %s' % str(e),
                              diagnostics={'size': matrix.shape[0], 'nnz': matrix.nnz})


class TimeStepper(object):
    def __init__(self, operator, dt, integrator=BDF2):
        """Fixed-step implicit integrator for dT/dt + A T = q.

        Implicit Euler is used for the first step (and every step when
        integrator is 'euler'); factorizations are computed once.
        """
        self.operator = sparse.csr_matrix(operator)
        self.dt = float(dt)
        self.integrator = integrator
        n = self.operator.shape[0]
        eye = sparse.identity(n, format='csr')
        self._euler_matrix = (eye / self.dt + self.operator).tocsr()
        self._bdf2_matrix = (eye * (1.5 / self.dt) + self.operator).tocsr()
        self._euler_lu = None
        self._bdf2_lu = None

    def step(self, state, rhs):
        """Advance one step; rhs is the source term at the new time level."""
        told = state.temperature
        if state.previous is None or self.integrator == EULER:
            if self._euler_lu is None:
                self._euler_lu = _factorize(self._euler_matrix)
            b = told / self.dt + rhs
            tnew = _solve_checked(self._euler_lu, self._euler_matrix, b)
        else:
            if self._bdf2_lu is None:
                self._bdf2_lu = _factorize(self._bdf2_matrix)
            b = (2.0 / self.dt) * told - (0.5 / self.dt) * state.previous + rhs
            tnew = _solve_checked(self._bdf2_lu, self._bdf2_matrix, b)
        return TransportState(tnew, state.time + self.dt, told, self.dt)


def bdf2_step(state, operator, rhs):
    """One BDF2 step (implicit Euler if no previous level is available).

    Solves (3/(2dt) I + A) T^{n+1} = (2/dt) T^n - (1/(2dt)) T^{n-1} + q.

    :param state:
      TransportState with dt set.
    :param operator:
      Capacity-scaled operator A.
    :param rhs:
      Source vector q at the new time level.
    :returns:
      New TransportState.
    """
    if state.dt is None or not state.dt > 0:
        raise DFMException('TransportState needs a positive step size.')
    return TimeStepper(operator, state.dt).step(state, rhs)


def run_schedule(operator, source, capacity, initial, schedule, production, label):
    """Step a (fine or coarse) system through a schedule.

    :param operator:
      Capacity-scaled operator.
    :param source:
      Capacity-scaled source vector (constant in time).
    :param capacity:
      Per-cell heat capacity, for the energy series.
    :param initial:
      Initial temperature vector.
    :param schedule:
      Schedule.
    :param production:
      Callable mapping a temperature vector to the production temperature.
    :param label:
      Name used in logs and results.
    :returns:
      TransportResult.
    """
    stepper = TimeStepper(operator, schedule.dt, schedule.integrator)
    state = TransportState(np.array(initial, dtype=float), 0.0, None, schedule.dt)
    # column sums of the unscaled operator give the power leaving the system
    raw = sparse.diags(capacity) @ sparse.csr_matrix(operator)
    outflow = np.asarray(raw.sum(axis=0)).ravel()
    injected = float(capacity @ source)

    outputs = set(int(s) for s in schedule.output_steps)
    snapshots = {0.0: state.temperature.copy()}
    step_times = np.arange(schedule.nsteps + 1) * schedule.dt
    prod = np.zeros(schedule.nsteps + 1)
    energy = np.zeros(schedule.nsteps + 1)
    produced = np.zeros(schedule.nsteps + 1)
    prod[0] = production(state.temperature)
    energy[0] = capacity @ state.temperature
    produced[0] = outflow @ state.temperature
    for k in range(1, schedule.nsteps + 1):
        state = stepper.step(state, source)
        prod[k] = production(state.temperature)
        energy[k] = capacity @ state.temperature
        produced[k] = outflow @ state.temperature
        if k in outputs:
            snapshots[float(step_times[k])] = state.temperature.copy()
    logging.info('%s run: %i steps of %.4g s, final production temperature %.4f C'
                 % (label, schedule.nsteps, schedule.dt, prod[-1]))
    info = {'integrator': schedule.integrator, 'dt': schedule.dt, 'steps': schedule.nsteps}
    return TransportResult(snapshots, step_times, prod, energy, produced, injected,
                           label, info)


def energy_audit(result):
    """Per-step energy balance residual, relative to the stored energy.

    The balance is written in the same discrete form as the integrator
    (implicit Euler for the first step, BDF2 afterwards), so it vanishes to
    solver tolerance for a conservative operator.
    """
    dt = result.info['dt']
    e = result.energy
    nsteps = len(e) - 1
    residual = np.zeros(nsteps)
    if nsteps == 0:
        return residual
    net = result.injected - result.produced
    residual[0] = (e[1] - e[0]) / dt - net[1]
    if result.info['integrator'] == BDF2:
        residual[1:] = (3 * e[2:] - 4 * e[1:-1] + e[:-2]) / (2 * dt) - net[2:]
    else:
        residual[1:] = (e[2:] - e[1:-1]) / dt - net[2:]
    return residual * dt / max(np.abs(e).max(), np.finfo(float).tiny)


def producer_weights(flux):
    """(cells, weights) of producing cells, weighted by produced volume rate."""
    cells = flux.producerCells()
    return cells, -flux.well_flux[cells]


def simulate_fine(grid, flux, props, wells, schedule, integrator=None):
    """Fine-scale advection-conduction simulation from the initial temperature.

    :param grid:
      FineGrid.
    :param flux:
      FluxField from the flow solve.
    :param props:
      ThermalProps.
    :param wells:
      WellSet used for the flow solve (producer cells come from the flux).
    :param schedule:
      Schedule.
    :param integrator:
      Optional override of the schedule integrator.
    :returns:
      TransportResult with snapshots and the production temperature per step.
    """
    if integrator is not None and integrator != schedule.integrator:
        schedule = Schedule(schedule.dt, schedule.end_time, schedule._output_times, integrator)
    A = assemble_advection(grid, flux, props) + assemble_conduction(grid, props, scaled=True)
    q = advection_source(grid, flux, props)
    capacity = cell_capacity(props, grid)
    initial = np.full(grid.cell_count, props.initial_temperature)
    cells, weights = producer_weights(flux)
    logging.info('Fine simulation: %i cells, %i wells, %i producer cells'
                 % (grid.cell_count, len(wells), len(cells)))

    def production(temperature):
        if not len(cells):
            return np.nan
        return weights @ temperature[cells] / weights.sum()

    return run_schedule(A, q, capacity, initial, schedule, production, 'fine')


def cell_velocity(grid, flux):
    """Cell-averaged Darcy velocity vectors reconstructed from face fluxes.

    u_K = (1/|K|) sum_f F_f (x_f - x_K), with x_f - x_K = d n for each face.
    """
    n = grid.cell_count
    i, j = grid.conn_cells.T
    v = flux.conn_flux
    u = np.zeros((n, 2))
    np.add.at(u, i, (v * grid.conn_dist[:, 0])[:, None] * grid.conn_normal)
    np.add.at(u, j, (v * grid.conn_dist[:, 1])[:, None] * grid.conn_normal)
    if len(grid.bnd_cell):
        np.add.at(u, grid.bnd_cell, (flux.bnd_flux * grid.bnd_dist)[:, None] * grid.bnd_normal)
    return u / grid.measure[:, None]


def peclet_field(grid, flux, props, length):
    """Cell heat Peclet number Pe = L u (rho c_p)_eff / C.

    :param length:
      Length scale L (m).
    :returns:
      Per-cell Peclet number.
    """
    if not length > 0:
        raise DFMException('Peclet length scale must be positive.')
    u = np.hypot(*cell_velocity(grid, flux).T)
    return length * u * effective_capacity(props, grid) / props.conductivity


def log_peclet(peclet, floor=1e-12):
    """log10 of a Peclet field, floored to keep stagnant cells finite."""
    return np.log10(np.maximum(peclet, floor))
