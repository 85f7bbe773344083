#!/usr/bin/env python
"""Scenario runner: fine reference, coarsening and coarse runs, and artifacts."""

# stdlib imports
import io
import logging
import os.path
import socket
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

# third party imports
import numpy as np
import pandas as pd
import yaml

# local imports
from dfmheat.io.gridfile import read_labels, write_basis_triplets, write_labels, write_network
from dfmheat.io.output import write_csv, write_summary, write_vtk
from dfmheat.models.basis import MODES, SMOOTHED, smooth_basis
from dfmheat.models.coarsen import (Partition, build_partition, inherit_partition,
                                    partition_stats)
from dfmheat.models.flow import solve_flow
from dfmheat.models.fracgen import GenSpec, generate
from dfmheat.models.transport import (assemble_conduction, cell_capacity, energy_audit,
                                      log_peclet, peclet_field, simulate_fine)
from dfmheat.models.upscaled import (build_coarse_system, error_series, prolong_to_fine,
                                     simulate_coarse)
from dfmheat.run.scenario import load_scenario
from dfmheat.utils.config import read_config, write_config
from dfmheat.utils.exception import (ConfigException, DFMException, GridException,
                                     SolverException)
from dfmheat.utils.logger import SimLogger
from dfmheat.utils.units import seconds_to_years

FINE = 'fine'
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


@dataclass
class CaseResult:
    """Everything computed for one refinement factor."""
    factor: int
    grid: object
    pressure: np.ndarray
    flux: object
    partition: object
    fine: object = None
    coarse: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    bases: dict = field(default_factory=dict)
    systems: dict = field(default_factory=dict)


def run_label(mode, factor):
    """Name of a run in file names: 'smoothed', or 'smoothed_x2' on refined grids."""
    return mode if factor == 1 else '%s_x%i' % (mode, factor)


def base_partition(scenario, grid, flux, props):
    """Partition of the unrefined grid, read from file or built from indicators."""
    if scenario.partition_file is not None:
        labels = read_labels(scenario.partition_file)
        if len(labels) != grid.cell_count:
            raise ConfigException('coarsening.partition: %i labels for %i cells.'
                                  % (len(labels), grid.cell_count))
        logging.info('Read partition from %s' % scenario.partition_file)
        return Partition.fromLabels(grid, labels)
    return build_partition(grid, flux, props, scenario.coarsening)


def run_case(scenario, factor, reference_grid, reference_partition, dt, fine_ref=True,
             modes=MODES):
    """Flow, fine reference and coarse runs on the grid refined by `factor`.

    :param scenario:
      Scenario.
    :param factor:
      Refinement factor of the fine grid.
    :param reference_grid:
      Unrefined grid the partition was built on.
    :param reference_partition:
      Partition of reference_grid, inherited by refined grids.
    :param dt:
      Time step shared by all cases (s).
    :param fine_ref:
      Whether to run the fine reference.
    :param modes:
      Basis modes to run.
    :returns:
      CaseResult.
    """
    if factor == 1:
        grid = reference_grid
    else:
        grid = scenario.buildGrid(factor)
    wells = scenario.buildWells(grid)
    props = scenario.thermalProps()
    pressure, flux = solve_flow(grid, scenario.flowProps(), wells, scenario.boundary)
    if factor == 1:
        partition = reference_partition
    else:
        partition = inherit_partition(reference_grid, reference_partition, grid)
    schedule = scenario.buildSchedule(dt=dt)
    case = CaseResult(factor, grid, pressure, flux, partition)
    if fine_ref:
        case.fine = simulate_fine(grid, flux, props, wells, schedule)
    capacity = cell_capacity(props, grid)
    for mode in modes:
        basis = None
        if mode == SMOOTHED:
            basis = smooth_basis(assemble_conduction(grid, props), partition,
                                 omega=scenario.basis['omega'],
                                 controls=scenario.smoothingControls(factor), grid=grid)
        system = build_coarse_system(grid, partition, flux, props, wells, basis,
                                     per_face=scenario.basis['per_face_upwind'])
        case.systems[mode] = system
        case.bases[mode] = basis
        case.coarse[mode] = simulate_coarse(system, schedule, props.initial_temperature)
        if case.fine is not None:
            case.errors[mode] = error_series(case.fine, case.coarse[mode], capacity,
                                             system.restriction)
            logging.info('x%i %s: final energy error %.4g'
                         % (factor, mode, case.errors[mode][1][-1]))
    return case


def _run_case_args(args):
    return run_case(*args)


def plan(scenario, fine_ref=True, modes=None):
    """What a run would do, without building anything."""
    modes = list(modes or scenario.basis['modes'])
    cases = []
    for factor in scenario.refinement:
        case = {'factor': factor, 'grid': scenario.grid['type']}
        if scenario.grid['type'] != 'import':
            case['nx'] = scenario.grid['nx'] * factor
            case['ny'] = scenario.grid['ny'] * factor
        runs = ([FINE] if fine_ref else []) + modes
        case['runs'] = [run_label(m, factor) for m in runs]
        if SMOOTHED in modes:
            controls = scenario.smoothingControls(factor)
            case['smoothing'] = {'max_sweeps': controls.max_iterations,
                                 'early_stop': scenario.basis['iterations'] is None}
        cases.append(case)
    return {'scenario': scenario.toDict(), 'fine_ref': fine_ref, 'modes': modes,
            'cases': cases}


def profile_table(grid, y, fields):
    """Values along the row of matrix cells whose centers lie closest to y.

    :param fields:
      Dict name -> per-cell array.
    :returns:
      pandas DataFrame with column x and one column per field, sorted by x.
    """
    matrix = grid.matrixCells()
    gap = np.abs(grid.center[matrix, 1] - y)
    row = matrix[gap <= gap.min() * (1 + 1e-9) + 1e-9]
    row = row[np.argsort(grid.center[row, 0], kind='stable')]
    frame = pd.DataFrame({'x': grid.center[row, 0]})
    for name, values in fields.items():
        frame[name] = np.asarray(values)[row]
    return frame


def _peclet_length(scenario, grid):
    length = scenario.outputs['peclet_length']
    if length is not None:
        return length
    if 'domain' in grid.metadata:
        xmin, xmax, ymin, ymax = grid.metadata['domain']
        return max(xmax - xmin, ymax - ymin)
    extent = grid.center.max(axis=0) - grid.center.min(axis=0)
    return float(extent.max())


def _final_fields(case):
    """Final fine temperatures of every run, coarse runs injected to fine cells."""
    fields = {}
    if case.fine is not None:
        fields['T_fine'] = case.fine.final
    for mode, result in case.coarse.items():
        fields['T_%s' % mode] = prolong_to_fine(result.final, case.systems[mode].restriction)
    return fields


def _case_summary(case, props):
    grid = case.grid
    summary = {
        'factor': case.factor,
        'partition': partition_stats(case.partition, grid),
        'mass_balance': float(np.abs(case.flux.massBalance(grid)).max()),
        'runs': {},
    }
    if case.fine is not None:
        summary['runs'][FINE] = {
            'final_production_C': float(case.fine.production[-1]),
            'energy_audit': float(np.abs(energy_audit(case.fine)).max(initial=0.0)),
            'steps': int(case.fine.info['steps']),
            'dt_s': float(case.fine.info['dt']),
        }
    for mode, result in case.coarse.items():
        entry = {
            'final_production_C': float(result.production[-1]),
            'energy_audit': float(np.abs(energy_audit(result)).max(initial=0.0)),
            'provenance': dict(case.systems[mode].provenance),
        }
        if mode in case.errors:
            times, eps = case.errors[mode]
            entry['epsilon_final'] = float(eps[-1])
            entry['epsilon_max'] = float(eps.max())
            entry['epsilon_time_years'] = float(seconds_to_years(times[-1]))
        summary['runs'][mode] = entry
    return summary


def run(scenario, outdir, fine_ref=True, modes=None, jobs=1):
    """Run a scenario and write all artifacts to outdir.

    :param scenario:
      Scenario.
    :param outdir:
      Artifact directory, created if needed.
    :param fine_ref:
      Run the fine reference (needed for energy errors).
    :param modes:
      Basis modes; defaults to those of the scenario.
    :param jobs:
      Number of worker processes for the refinement cases.
    :returns:
      Tuple (summary dict, list of CaseResult).
    """
    modes = [m for m in MODES if m in (modes or scenario.basis['modes'])]
    if not os.path.isdir(outdir):
        os.makedirs(outdir)
    write_config(scenario.toDict(), os.path.join(outdir, 'resolved_config.yml'))

    grid = scenario.buildGrid(1)
    props = scenario.thermalProps()
    wells = scenario.buildWells(grid)
    _, flux = solve_flow(grid, scenario.flowProps(), wells, scenario.boundary)
    partition = base_partition(scenario, grid, flux, props)
    # all refinement cases share the time step of the unrefined grid
    dt = scenario.buildSchedule(grid, flux, props).dt
    tasks = [(scenario, factor, grid, partition, dt, fine_ref, modes)
             for factor in scenario.refinement]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            cases = list(executor.map(_run_case_args, tasks))
    else:
        cases = [run_case(*task) for task in tasks]

    summary = {
        'scenario': scenario.name,
        'seed': scenario.seed,
        'modes': modes,
        'fine_ref': fine_ref,
        'cases': [_case_summary(case, props) for case in cases],
    }
    _write_artifacts(scenario, outdir, cases, props, summary)
    write_summary(os.path.join(outdir, 'summary.json'), summary)
    logging.info('Wrote artifacts to %s' % outdir)
    return summary, cases


def _write_artifacts(scenario, outdir, cases, props, summary):
    base = cases[0]
    write_labels(base.partition.labels, os.path.join(outdir, 'partition.txt'))
    if base.bases.get(SMOOTHED) is not None:
        write_basis_triplets(base.bases[SMOOTHED], os.path.join(outdir, 'basis_smoothed.txt'))

    for case in cases:
        if case.fine is not None:
            write_csv(os.path.join(outdir, 'production_%s.csv' % run_label(FINE, case.factor)),
                      case.fine.step_times, case.fine.production)
        for mode, result in case.coarse.items():
            label = run_label(mode, case.factor)
            write_csv(os.path.join(outdir, 'production_%s.csv' % label),
                      result.step_times, result.production)
            if mode in case.errors:
                times, eps = case.errors[mode]
                production = [result.production[int(round(t / result.info['dt']))]
                              for t in times]
                write_csv(os.path.join(outdir, 'error_%s.csv' % label), times, production, eps)

    if len(cases) > 1 or base.fine is not None:
        rows = []
        for case in cases:
            stats = partition_stats(case.partition, case.grid)
            row = {'factor': case.factor, 'fine_count': stats['fine_count'],
                   'coarse_count': stats['coarse_count'],
                   'coarsening_factor': stats['coarsening_factor']}
            for mode in MODES:
                row['epsilon_%s' % mode] = (case.errors[mode][1][-1]
                                            if mode in case.errors else np.nan)
            rows.append(row)
        table = pd.DataFrame(rows)
        table.to_csv(os.path.join(outdir, 'refinement.csv'), index=False, float_format='%.17g')
        summary['refinement'] = table.to_dict(orient='records')

    fields = _final_fields(base)
    peclet = peclet_field(base.grid, base.flux, props, _peclet_length(scenario, base.grid))
    if scenario.outputs['profile_y'] is not None and fields:
        frame = profile_table(base.grid, scenario.outputs['profile_y'], fields)
        frame.to_csv(os.path.join(outdir, 'profile.csv'), index=False, float_format='%.17g')
    if scenario.outputs['vtk']:
        vtk_fields = dict(fields)
        vtk_fields['pressure'] = base.pressure
        vtk_fields['partition'] = base.partition.labels
        vtk_fields['log10_peclet'] = log_peclet(peclet)
        write_vtk(os.path.join(outdir, 'fields.vtk'), base.grid, vtk_fields)
    if scenario.outputs['plots']:
        _draw_plots(outdir, base, fields, peclet, scenario.name)


def _draw_plots(outdir, case, fields, peclet, name):
    # deferred import keeps matplotlib out of runs without plots
    from dfmheat.vis.curves import draw_cell_field, draw_error_curves, draw_production_curves
    results = {}
    if case.fine is not None:
        results[FINE] = case.fine
    results.update(case.coarse)
    if results:
        draw_production_curves(results, os.path.join(outdir, 'production.png'), title=name)
    if case.errors:
        draw_error_curves(case.errors, os.path.join(outdir, 'error.png'), title=name)
    draw_cell_field(case.grid, log_peclet(peclet), os.path.join(outdir, 'peclet.png'),
                    label='log$_{10}$ Pe', title=name)
    for key, values in fields.items():
        draw_cell_field(case.grid, values, os.path.join(outdir, '%s.png' % key),
                        label='T ($^\\circ$C)', cmap='coolwarm', title=name)


def run_coarsen(scenario, output):
    """Build the partition of the unrefined grid and write its labels.

    :returns:
      Partition.
    """
    grid = scenario.buildGrid(1)
    wells = scenario.buildWells(grid)
    _, flux = solve_flow(grid, scenario.flowProps(), wells, scenario.boundary)
    partition = base_partition(scenario, grid, flux, scenario.thermalProps())
    write_labels(partition.labels, output)
    logging.info('Wrote %i labels (%i coarse cells) to %s'
                 % (grid.cell_count, partition.coarse_count, output))
    return partition


def run_gen_network(spec, output, seed=None):
    """Generate a fracture network from a YAML generator spec and write it.

    :param spec:
      YAML file holding a generator mapping (optionally under a
      'generator' key).
    :param output:
      Network file to write.
    :param seed:
      Optional seed overriding the file.
    :returns:
      FractureNetwork.
    """
    config = read_config(spec)
    config = config.get('generator', config)
    if not isinstance(config, dict):
        raise ConfigException('generator must be a mapping.')
    if seed is not None:
        config = dict(config)
        config['seed'] = seed
    network = generate(GenSpec.fromDict(config))
    write_network(network, output)
    return network


def main(pargs):
    """Entry point of the dfmheat command line program.

    :param pargs:
      argparse Namespace with a `command` of run, gen-network or coarsen.
    :returns:
      Process exit code: 0 on success, 3 for solver failures and 2 for
      configuration, grid and any other dfmheat errors.
    """
    debug = getattr(pargs, 'debug', False)
    logfile = None
    outdir = getattr(pargs, 'outdir', None)
    if pargs.command == 'run' and not getattr(pargs, 'dry_run', False) and not debug:
        if not os.path.isdir(outdir):
            os.makedirs(outdir)
        logfile = os.path.join(outdir, 'run.log')
    simlogger = SimLogger(logfile, debug=debug)
    try:
        if pargs.command == 'run':
            scenario = load_scenario(pargs.config, seed=pargs.seed)
            modes = None
            if pargs.basis is not None:
                modes = list(MODES) if pargs.basis == 'both' else [pargs.basis]
            if pargs.dry_run:
                print(yaml.safe_dump(plan(scenario, pargs.fine_ref, modes),
                                     default_flow_style=False, sort_keys=True))
                return EXIT_OK
            summary, _ = run(scenario, outdir, pargs.fine_ref, modes, pargs.jobs)
            print('Wrote results for %s to %s' % (summary['scenario'], outdir))
        elif pargs.command == 'gen-network':
            network = run_gen_network(pargs.spec, pargs.output, pargs.seed)
            print('Wrote %i fractures to %s' % (len(network), pargs.output))
        elif pargs.command == 'coarsen':
            scenario = load_scenario(pargs.config)
            partition = run_coarsen(scenario, pargs.output)
            print('Wrote %i coarse cells to %s' % (partition.coarse_count, pargs.output))
        else:
            raise ConfigException('Unknown command "%s".' % pargs.command)
        return EXIT_OK
    except (ConfigException, GridException) as e:
        logging.critical(str(e))
        print('Error: %s' % str(e))
        return EXIT_CONFIG
    except SolverException as e:
        logging.critical(str(e))
        print('Solver failure: %s' % str(e))
        return EXIT_SOLVER
    except DFMException as e:
        # invalid input caught below the configuration layer
        logging.critical(str(e))
        print('Error: %s' % str(e))
        return EXIT_CONFIG
    except Exception as e:
        f = io.StringIO()
        traceback.print_exc(file=f)
        msg = '%s\n %s' % (str(e), f.getvalue())
        msg = msg + '\n' + 'Error occurred on %s\n' % socket.gethostname()
        f.close()
        logging.critical(msg)
        raise
    finally:
        simlogger.close()
