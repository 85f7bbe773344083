#!/usr/bin/env python
"""Scenario files: YAML with explicit units on every physical quantity.

A scenario describes one experiment: the grid (and any refinements of it),
material constants, wells and boundary pressures, the time schedule, how
to coarsen and which coarse bases to run.  Everything is converted to SI
when the file is loaded.
"""

# stdlib imports
import copy
import logging
import os.path
from dataclasses import dataclass, field

# third party imports
import numpy as np

# local imports
from dfmheat.io.gridfile import import_grid, read_network
from dfmheat.models.basis import MODES, OMEGA, RESIDUAL_TOL, SmoothingControls
from dfmheat.models.coarsen import CoarseningParams, INDICATORS, DISTANCE, TOF
from dfmheat.models.flow import PRESSURE, RATE, FlowProps, Well, WellSet
from dfmheat.models.fracgen import GenSpec, generate
from dfmheat.models.grid import (FractureNetwork, build_cartesian_dfm, locate_cells,
                                 make_domain, rasterize_network)
from dfmheat.models.transport import (BDF2, EULER, CONDUCTIVITY, FLUID_CAPACITY,
                                      INITIAL_TEMPERATURE, INJECTION_TEMPERATURE,
                                      POROSITY, ROCK_CAPACITY, Schedule, ThermalProps)
from dfmheat.utils.config import read_config
from dfmheat.utils.datapath import get_scenario_path
from dfmheat.utils.exception import ConfigException, DFMException
from dfmheat.utils.units import parse_number, parse_quantity

CARTESIAN = 'cartesian'
IMPORT = 'import'
RASTERIZED = 'rasterized'
GRID_TYPES = (CARTESIAN, IMPORT, RASTERIZED)
TARGETS = ('any', 'matrix', 'fracture')

DEFAULT_MATERIAL = {
    'matrix_permeability': '1 mD',
    'viscosity': '1 cP',
    'porosity': POROSITY,
    'rock_capacity': '%g kJ/m^3/K' % (ROCK_CAPACITY / 1e3),
    'fluid_capacity': '%g kJ/m^3/K' % (FLUID_CAPACITY / 1e3),
    'conductivity': '%g W/m/K' % CONDUCTIVITY,
    'initial_temperature': '%g C' % INITIAL_TEMPERATURE,
    'injection_temperature': '%g C' % INJECTION_TEMPERATURE,
}
DEFAULT_DOMAIN = ['0 m', '1000 m', '0 m', '1000 m']


def _mapping(config, key, path, required=False):
    value = config.get(key)
    if value is None:
        if required:
            raise ConfigException('%s is required.' % path)
        return {}
    if not isinstance(value, dict):
        raise ConfigException('%s must be a mapping.' % path)
    return value


def _flag(value, path):
    if not isinstance(value, bool):
        raise ConfigException('%s: expected true or false, got %r' % (path, value))
    return value


def _positive(value, path):
    if not value > 0:
        raise ConfigException('%s: must be positive' % path)
    return value


def _point(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigException('%s must be a pair of lengths.' % path)
    return tuple(parse_quantity(v, 'length', path) for v in value)


def _domain(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ConfigException('%s must be a list of four lengths (xmin, xmax, ymin, ymax).'
                              % path)
    domain = [parse_quantity(v, 'length', path) for v in value]
    try:
        return tuple(make_domain(domain))
    except DFMException as e:
        raise ConfigException('%s: %s' % (path, e.value))


def _resolve(path, basedir):
    if path is None or os.path.isabs(path):
        return path
    return os.path.normpath(os.path.join(basedir, path))


def _parse_fracture(item, domain, nx, ny, path):
    """One fracture entry: either start/end coordinates or a grid-line index."""
    if not isinstance(item, dict):
        raise ConfigException('%s must be a mapping.' % path)
    aperture = parse_quantity(item.get('aperture'), 'length', '%s.aperture' % path)
    _positive(aperture, '%s.aperture' % path)
    if 'axis' in item:
        # a fracture along a grid line, given by node indices of the unrefined grid
        axis = item['axis']
        if axis not in ('x', 'y'):
            raise ConfigException('%s.axis must be x or y.' % path)
        index = parse_number(item.get('index'), '%s.index' % path, integer=True)
        start = parse_number(item.get('from'), '%s.from' % path, integer=True)
        end = parse_number(item.get('to'), '%s.to' % path, integer=True)
        xmin, xmax, ymin, ymax = domain
        dx = (xmax - xmin) / nx
        dy = (ymax - ymin) / ny
        if axis == 'x':
            if not (0 <= index <= ny and 0 <= start <= nx and 0 <= end <= nx):
                raise ConfigException('%s: node indices outside the %ix%i grid.'
                                      % (path, nx, ny))
            segment = [(xmin + start * dx, ymin + index * dy), (xmin + end * dx, ymin + index * dy)]
        else:
            if not (0 <= index <= nx and 0 <= start <= ny and 0 <= end <= ny):
                raise ConfigException('%s: node indices outside the %ix%i grid.'
                                      % (path, nx, ny))
            segment = [(xmin + index * dx, ymin + start * dy), (xmin + index * dx, ymin + end * dy)]
    else:
        segment = [_point(item.get('start'), '%s.start' % path),
                   _point(item.get('end'), '%s.end' % path)]
    return segment, aperture


@dataclass
class Scenario:
    """A parsed scenario; every quantity is in SI units (temperatures in C)."""
    name: str
    grid: dict
    material: dict
    wells: list
    schedule: dict
    seed: int = 0
    refinement: list = field(default_factory=lambda: [1])
    boundary: dict = field(default_factory=dict)
    coarsening: CoarseningParams = field(default_factory=CoarseningParams)
    partition_file: str = None
    basis: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @classmethod
    def fromConfig(cls, config, name='scenario', basedir='.', seed=None):
        """Parse and validate a scenario mapping.

        :param config:
          Dictionary as read from YAML.
        :param name:
          Scenario name used when the file does not set one.
        :param basedir:
          Directory relative file names are resolved against.
        :param seed:
          Optional seed overriding the one in the file.
        :returns:
          Scenario.
        :raises:
          ConfigException naming the offending field path.
        """
        if not isinstance(config, dict):
            raise ConfigException('Scenario must be a mapping.')
        config = copy.deepcopy(config)
        if seed is not None:
            config['seed'] = seed
        name = str(config.get('name', name))
        seed = parse_number(config.get('seed', 0), 'seed', integer=True)
        grid = _parse_grid(_mapping(config, 'grid', 'grid', required=True), basedir, seed)
        refinement = config.get('refinement', [1])
        if not isinstance(refinement, list) or not refinement:
            raise ConfigException('refinement must be a non-empty list of factors.')
        refinement = [parse_number(f, 'refinement', positive=True, integer=True)
                      for f in refinement]
        if refinement[0] != 1:
            raise ConfigException('refinement must start with factor 1.')
        if len(refinement) > 1 and grid['type'] == IMPORT:
            raise ConfigException('refinement: imported grids cannot be refined.')
        material = _parse_material(_mapping(config, 'material', 'material'))
        wells = _parse_wells(config.get('wells'))
        boundary = {}
        for tag, value in _mapping(config, 'boundary', 'boundary').items():
            boundary[str(tag)] = parse_quantity(value, 'pressure', 'boundary.%s' % tag)
        schedule = _parse_schedule(_mapping(config, 'schedule', 'schedule', required=True))
        coarsening, partition_file = _parse_coarsening(
            _mapping(config, 'coarsening', 'coarsening'), grid, basedir)
        basis = _parse_basis(_mapping(config, 'basis', 'basis'))
        if basis['iterations'] is not None and len(basis['iterations']) != len(refinement):
            raise ConfigException('basis.iterations: got %i counts for %i refinement factors.'
                                  % (len(basis['iterations']), len(refinement)))
        outputs = _parse_outputs(_mapping(config, 'outputs', 'outputs'))
        return cls(name, grid, material, wells, schedule, seed, refinement, boundary,
                   coarsening, partition_file, basis, outputs, config)

    def buildNetwork(self):
        """FractureNetwork of a cartesian or rasterized grid, None for imports."""
        grid = self.grid
        if grid['type'] == IMPORT:
            return None
        segments = [seg for seg, _ in grid['fractures']]
        apertures = [ap for _, ap in grid['fractures']]
        network = FractureNetwork(np.array(segments, dtype=float).reshape(-1, 2, 2), apertures)
        if grid.get('network') is not None:
            loaded = read_network(grid['network'])
            network = FractureNetwork(np.concatenate([network.segments, loaded.segments]),
                                      np.concatenate([network.apertures, loaded.apertures]))
        if grid.get('generator') is not None:
            network = generate(GenSpec.fromDict(grid['generator'], network))
        return network

    def buildGrid(self, factor=1):
        """Build the fine grid, refined by `factor` in each direction."""
        grid = self.grid
        if grid['type'] == IMPORT:
            if factor != 1:
                raise ConfigException('refinement: imported grids cannot be refined.')
            return import_grid(grid['path'])
        nx, ny = grid['nx'] * factor, grid['ny'] * factor
        network = self.buildNetwork()
        if grid['type'] == CARTESIAN:
            return build_cartesian_dfm(grid['domain'], nx, ny, network)
        return rasterize_network(grid['domain'], nx, ny, network)

    def buildWells(self, fine):
        """Place the configured wells on a fine grid.

        :param fine:
          FineGrid the wells are located on.
        :returns:
          WellSet.
        """
        wells = []
        for spec in self.wells:
            path = 'wells.%s' % spec['name']
            if spec['location'] == 'point':
                cells = locate_cells(fine, [spec['point']], spec['target'])[0]
            elif spec['location'] == 'cells':
                cells = np.asarray(spec['cells'], dtype=np.int64)
                if (cells < 0).any() or (cells >= fine.cell_count).any():
                    raise ConfigException('%s.cells: index outside 0..%i.'
                                          % (path, fine.cell_count - 1))
            else:
                cells = fine.fractureBoundaryCells()
                if not len(cells):
                    raise ConfigException('%s: grid has no fracture cells on the boundary.' % path)
            wells.append(Well(spec['name'], cells, spec['type'], spec['rate'],
                              spec['pressure'], spec['index']))
            logging.info('Well %s: %i cells' % (spec['name'], len(cells)))
        return WellSet(wells)

    def flowProps(self):
        m = self.material
        return FlowProps(m['matrix_permeability'], m['viscosity'])

    def thermalProps(self):
        m = self.material
        return ThermalProps(m['rock_capacity'], m['fluid_capacity'], m['porosity'],
                            m['conductivity'], m['injection_temperature'],
                            m['initial_temperature'], m['boundary_temperature'])

    def buildSchedule(self, fine=None, flux=None, props=None, dt=None):
        """Schedule from the config; dt defaults to an advective CFL of about 5.

        :param dt:
          Step size (s) overriding both the file and the CFL default.
        """
        s = self.schedule
        if dt is None:
            dt = s['dt']
        if dt is None:
            if fine is None or flux is None:
                raise ConfigException('schedule.dt is required without a flow field.')
            dt = Schedule.default_dt(fine, flux, props or self.thermalProps(), s['end_time'])
        output_times = s['output_times']
        if output_times is None and s['output_every'] is not None:
            output_times = np.arange(s['output_every'], s['end_time'] + 0.5 * s['output_every'],
                                     s['output_every'])
        return Schedule(dt, s['end_time'], output_times, s['integrator'])

    def smoothingControls(self, factor=1):
        """Smoothing controls for the grid refined by `factor`.

        With basis.iterations set, the count for this factor is run as is:
        no residual or energy stop.
        """
        b = self.basis
        if b['iterations'] is not None:
            if factor not in self.refinement:
                raise ConfigException('No basis.iterations entry for refinement factor %i.'
                                      % factor)
            count = b['iterations'][self.refinement.index(factor)]
            return SmoothingControls(count, 0.0, False, b['clamp_negative'],
                                     b['freeze_all_bases'], b['checkpoint_depth'])
        return SmoothingControls(b['max_iterations'], b['residual_tol'], b['energy_stop'],
                                 b['clamp_negative'], b['freeze_all_bases'],
                                 b['checkpoint_depth'])

    def toDict(self):
        """Resolved values in SI units, for resolved_config.yml and dry runs."""
        coarsening = {
            'indicators': list(self.coarsening.indicators),
            'tof_bins': self.coarsening.tof_bins,
            'distance_widths': self.coarsening.distance_widths,
            'start_cells': self.coarsening.start_cells,
            'ratio': self.coarsening.ratio,
            'box_size': (list(self.coarsening.box_size)
                         if self.coarsening.box_size is not None else None),
            'merge_threshold': self.coarsening.merge_threshold,
            'partition': self.partition_file,
        }
        grid = dict(self.grid)
        grid['domain'] = list(grid['domain']) if grid.get('domain') is not None else None
        grid['fractures'] = [{'segment': np.asarray(seg).tolist(), 'aperture': ap}
                             for seg, ap in grid.get('fractures', [])]
        schedule = dict(self.schedule)
        if schedule['output_times'] is not None:
            schedule['output_times'] = list(schedule['output_times'])
        wells = []
        for spec in self.wells:
            spec = dict(spec)
            if spec.get('point') is not None:
                spec['point'] = list(spec['point'])
            wells.append(spec)
        return {'name': self.name, 'seed': self.seed, 'grid': grid,
                'refinement': list(self.refinement), 'material': dict(self.material),
                'wells': wells, 'boundary': dict(self.boundary), 'schedule': schedule,
                'coarsening': coarsening, 'basis': dict(self.basis),
                'outputs': dict(self.outputs)}


def _parse_grid(section, basedir, seed):
    kind = section.get('type', CARTESIAN)
    if kind not in GRID_TYPES:
        raise ConfigException('grid.type must be one of %s, got "%s".'
                              % (', '.join(GRID_TYPES), kind))
    grid = {'type': kind}
    if kind == IMPORT:
        path = section.get('path')
        if not isinstance(path, str):
            raise ConfigException('grid.path is required for imported grids.')
        grid['path'] = _resolve(path, basedir)
        grid['domain'] = None
        grid['fractures'] = []
        return grid
    grid['domain'] = _domain(section.get('domain', DEFAULT_DOMAIN), 'grid.domain')
    grid['nx'] = parse_number(section.get('nx'), 'grid.nx', positive=True, integer=True)
    grid['ny'] = parse_number(section.get('ny'), 'grid.ny', positive=True, integer=True)
    fractures = section.get('fractures', [])
    if not isinstance(fractures, list):
        raise ConfigException('grid.fractures must be a list.')
    grid['fractures'] = [_parse_fracture(item, grid['domain'], grid['nx'], grid['ny'],
                                         'grid.fractures[%i]' % k)
                         for k, item in enumerate(fractures)]
    network = section.get('network')
    grid['network'] = _resolve(network, basedir) if network is not None else None
    generator = section.get('generator')
    if generator is not None:
        if kind != RASTERIZED:
            raise ConfigException('grid.generator needs grid.type rasterized.')
        if not isinstance(generator, dict):
            raise ConfigException('grid.generator must be a mapping.')
        generator = dict(generator)
        generator.setdefault('domain', section.get('domain', DEFAULT_DOMAIN))
        generator.setdefault('seed', seed)
        # validate early so errors surface before any grid is built
        GenSpec.fromDict(generator)
    grid['generator'] = generator
    return grid


def _parse_material(section):
    values = dict(DEFAULT_MATERIAL)
    values.update(section)
    material = {
        'matrix_permeability': parse_quantity(values['matrix_permeability'], 'permeability',
                                              'material.matrix_permeability'),
        'viscosity': parse_quantity(values['viscosity'], 'viscosity', 'material.viscosity'),
        'porosity': parse_number(values['porosity'], 'material.porosity'),
        'rock_capacity': parse_quantity(values['rock_capacity'], 'heat_capacity',
                                        'material.rock_capacity'),
        'fluid_capacity': parse_quantity(values['fluid_capacity'], 'heat_capacity',
                                         'material.fluid_capacity'),
        'conductivity': parse_quantity(values['conductivity'], 'conductivity',
                                       'material.conductivity'),
        'initial_temperature': parse_quantity(values['initial_temperature'], 'temperature',
                                              'material.initial_temperature'),
        'injection_temperature': parse_quantity(values['injection_temperature'], 'temperature',
                                                'material.injection_temperature'),
        'boundary_temperature': None,
    }
    if values.get('boundary_temperature') is not None:
        material['boundary_temperature'] = parse_quantity(values['boundary_temperature'],
                                                          'temperature',
                                                          'material.boundary_temperature')
    for key in ('matrix_permeability', 'viscosity', 'rock_capacity', 'fluid_capacity',
                'conductivity'):
        _positive(material[key], 'material.%s' % key)
    if not 0 <= material['porosity'] <= 1:
        raise ConfigException('material.porosity: must lie in [0, 1]')
    return material


def _parse_wells(section):
    if section is None:
        raise ConfigException('wells is required.')
    if not isinstance(section, list) or not section:
        raise ConfigException('wells must be a non-empty list.')
    wells = []
    names = set()
    for k, item in enumerate(section):
        if not isinstance(item, dict):
            raise ConfigException('wells[%i] must be a mapping.' % k)
        name = str(item.get('name', 'well%i' % k))
        path = 'wells.%s' % name
        if name in names:
            raise ConfigException('%s: duplicate well name.' % path)
        names.add(name)
        kind = item.get('type', RATE)
        if kind not in (RATE, PRESSURE):
            raise ConfigException('%s.type must be rate or pressure.' % path)
        spec = {'name': name, 'type': kind, 'rate': 0.0, 'pressure': None, 'index': None,
                'point': None, 'cells': None,
                'target': item.get('target', 'any')}
        if spec['target'] not in TARGETS:
            raise ConfigException('%s.target must be one of %s.' % (path, ', '.join(TARGETS)))
        if kind == RATE:
            spec['rate'] = parse_quantity(item.get('rate'), 'rate', '%s.rate' % path)
        else:
            spec['pressure'] = parse_quantity(item.get('pressure'), 'pressure',
                                              '%s.pressure' % path)
            if item.get('index') is not None:
                spec['index'] = _positive(parse_quantity(item['index'], 'well_index',
                                                         '%s.index' % path),
                                          '%s.index' % path)
        locations = [key for key in ('point', 'cells', 'fracture_outlets') if key in item]
        if len(locations) != 1:
            raise ConfigException('%s needs exactly one of point, cells or fracture_outlets.'
                                  % path)
        spec['location'] = locations[0]
        if locations[0] == 'point':
            spec['point'] = _point(item['point'], '%s.point' % path)
        elif locations[0] == 'cells':
            cells = item['cells']
            if not isinstance(cells, list) or not cells:
                raise ConfigException('%s.cells must be a non-empty list.' % path)
            spec['cells'] = [parse_number(c, '%s.cells' % path, integer=True) for c in cells]
        else:
            _flag(item['fracture_outlets'], '%s.fracture_outlets' % path)
            if not item['fracture_outlets']:
                raise ConfigException('%s.fracture_outlets must be true when given.' % path)
        wells.append(spec)
    return wells


def _parse_schedule(section):
    if section.get('end_time') is None:
        raise ConfigException('schedule.end_time is required.')
    end_time = _positive(parse_quantity(section['end_time'], 'time', 'schedule.end_time'),
                         'schedule.end_time')
    dt = None
    if section.get('dt') is not None:
        dt = _positive(parse_quantity(section['dt'], 'time', 'schedule.dt'), 'schedule.dt')
    if section.get('output_times') is not None and section.get('output_every') is not None:
        raise ConfigException('schedule: give output_times or output_every, not both.')
    output_times = None
    if section.get('output_times') is not None:
        if not isinstance(section['output_times'], list):
            raise ConfigException('schedule.output_times must be a list of times.')
        output_times = [parse_quantity(t, 'time', 'schedule.output_times')
                        for t in section['output_times']]
        if any(t < 0 or t > end_time for t in output_times):
            raise ConfigException('schedule.output_times must lie in [0, end_time].')
    output_every = None
    if section.get('output_every') is not None:
        output_every = _positive(parse_quantity(section['output_every'], 'time',
                                                'schedule.output_every'),
                                 'schedule.output_every')
    integrator = section.get('integrator', BDF2)
    if integrator not in (BDF2, EULER):
        raise ConfigException('schedule.integrator must be %s or %s.' % (BDF2, EULER))
    return {'dt': dt, 'end_time': end_time, 'output_times': output_times,
            'output_every': output_every, 'integrator': integrator}


def _parse_coarsening(section, grid, basedir):
    indicators = section.get('indicators', [TOF, DISTANCE])
    if isinstance(indicators, str):
        indicators = [indicators]
    if not isinstance(indicators, list) or not indicators:
        raise ConfigException('coarsening.indicators must be a non-empty list.')
    unknown = [i for i in indicators if i not in INDICATORS]
    if unknown:
        raise ConfigException('coarsening.indicators: unknown indicator(s) %s; expected %s.'
                              % (', '.join(map(str, unknown)), ', '.join(INDICATORS)))
    widths = section.get('distance_widths')
    if widths is not None:
        if not isinstance(widths, list) or not widths:
            raise ConfigException('coarsening.distance_widths must be a list of lengths.')
        widths = [_positive(parse_quantity(w, 'length', 'coarsening.distance_widths'),
                            'coarsening.distance_widths') for w in widths]
    box_size = section.get('box_size')
    if box_size is not None:
        box_size = tuple(_positive(v, 'coarsening.box_size')
                         for v in _point(box_size, 'coarsening.box_size'))
    try:
        params = CoarseningParams(
            indicators=list(indicators),
            tof_bins=parse_number(section.get('tof_bins', 6), 'coarsening.tof_bins',
                                  positive=True, integer=True),
            distance_widths=widths,
            start_cells=parse_number(section.get('start_cells', 2.0), 'coarsening.start_cells',
                                     positive=True),
            ratio=parse_number(section.get('ratio', 2.0), 'coarsening.ratio', positive=True),
            box_size=box_size,
            merge_threshold=parse_number(section.get('merge_threshold', 4),
                                         'coarsening.merge_threshold', integer=True))
    except ConfigException:
        raise
    except DFMException as e:
        # CoarseningParams validates combinations, e.g. box without box_size
        raise ConfigException('coarsening: %s' % e.value)
    partition = section.get('partition')
    if partition is not None:
        partition = _resolve(partition, basedir)
    return params, partition


def _parse_basis(section):
    modes = section.get('modes', list(MODES))
    if isinstance(modes, str):
        modes = [modes]
    if not isinstance(modes, list) or not modes or any(m not in MODES for m in modes):
        raise ConfigException('basis.modes must list modes out of %s.' % ', '.join(MODES))
    omega = parse_number(section.get('omega', OMEGA), 'basis.omega')
    if not 0 < omega <= 1:
        raise ConfigException('basis.omega: must lie in (0, 1]')
    basis = {
        'modes': [m for m in MODES if m in modes],
        'omega': omega,
        'max_iterations': parse_number(section.get('max_iterations', 100),
                                       'basis.max_iterations', integer=True),
        'residual_tol': parse_number(section.get('residual_tol', RESIDUAL_TOL),
                                     'basis.residual_tol'),
        'checkpoint_depth': parse_number(section.get('checkpoint_depth', 10),
                                         'basis.checkpoint_depth', integer=True),
    }
    for key, default in (('energy_stop', True), ('clamp_negative', True),
                         ('freeze_all_bases', True), ('per_face_upwind', False)):
        basis[key] = _flag(section.get(key, default), 'basis.%s' % key)
    for key in ('max_iterations', 'checkpoint_depth'):
        if basis[key] < 0:
            raise ConfigException('basis.%s: must be >= 0' % key)
    # fixed sweep counts per refinement factor, run without early termination
    iterations = section.get('iterations')
    if iterations is not None:
        if not isinstance(iterations, list) or not iterations:
            raise ConfigException('basis.iterations must be a list with one count per '
                                  'refinement factor.')
        iterations = [parse_number(n, 'basis.iterations', integer=True) for n in iterations]
        if min(iterations) < 0:
            raise ConfigException('basis.iterations: must be >= 0')
    basis['iterations'] = iterations
    if basis['residual_tol'] < 0:
        raise ConfigException('basis.residual_tol: must be >= 0')
    return basis


def _parse_outputs(section):
    outputs = {
        'vtk': _flag(section.get('vtk', True), 'outputs.vtk'),
        'plots': _flag(section.get('plots', True), 'outputs.plots'),
        'profile_y': None,
        'peclet_length': None,
    }
    if section.get('profile_y') is not None:
        outputs['profile_y'] = parse_quantity(section['profile_y'], 'length',
                                              'outputs.profile_y')
    if section.get('peclet_length') is not None:
        outputs['peclet_length'] = _positive(parse_quantity(section['peclet_length'], 'length',
                                                            'outputs.peclet_length'),
                                             'outputs.peclet_length')
    return outputs


def load_scenario(filename, seed=None):
    """Read a scenario file, or a bundled scenario given by name.

    :param filename:
      Path to a YAML file, or the name of a bundled scenario.
    :param seed:
      Optional seed overriding the file.
    :returns:
      Scenario.
    """
    if not os.path.isfile(filename) and get_scenario_path(filename) is not None:
        filename = get_scenario_path(filename)
    config = read_config(filename)
    name = os.path.splitext(os.path.basename(filename))[0]
    basedir = os.path.dirname(os.path.abspath(filename))
    return Scenario.fromConfig(config, name, basedir, seed)
