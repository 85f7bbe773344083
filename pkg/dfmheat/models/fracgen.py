#!/usr/bin/env python
"""Stochastic fracture network generation.

Lengths follow a truncated power law n(l) ~ l^-a on [lmin, lmax],
midpoints are uniform in the domain and orientations are either uniform or
drawn around a small set of preferred angles.
"""

# stdlib imports
import logging
import warnings

# third party imports
import numpy as np
import shapely

# local imports
from dfmheat.models.grid import FractureNetwork, make_domain
from dfmheat.utils.exception import ConfigException
from dfmheat.utils.units import parse_number, parse_quantity

MIN_APERTURE = 1e-4
MAX_APERTURE = 1.0

POWER_LAW = 'power_law'
FIXED = 'fixed'
UNIFORM = 'uniform'
TWO_SET = 'two_set'
PROPORTIONAL = 'proportional'


def sample_power_law(rng, n, exponent, lmin, lmax):
    """Draw n lengths from a power law truncated to [lmin, lmax].

    Inverse transform of the CDF of p(l) ~ l^-exponent:
    l = (lmin^(1-a) - u (lmin^(1-a) - lmax^(1-a)))^(1/(1-a)).
    """
    if not exponent > 1:
        raise ConfigException('Power-law exponent must be > 1, got %g.' % exponent)
    if not 0 < lmin < lmax:
        raise ConfigException('Power-law bounds need 0 < lmin < lmax.')
    u = rng.random(n)
    b = 1.0 - exponent
    return (lmin ** b - u * (lmin ** b - lmax ** b)) ** (1.0 / b)


def power_law_cdf(length, exponent, lmin, lmax):
    """CDF of the truncated power law, for goodness-of-fit checks."""
    b = 1.0 - exponent
    length = np.clip(length, lmin, lmax)
    return (lmin ** b - length ** b) / (lmin ** b - lmax ** b)


class GenSpec(object):
    def __init__(self, domain, count=0, length=None, orientation=None, aperture=None,
                 seed=0, deterministic=None):
        """Description of a fracture network to generate.

        :param domain:
          (xmin, xmax, ymin, ymax) in m.
        :param count:
          Number of stochastic fractures.
        :param length:
          {'kind': 'power_law', 'exponent', 'lmin', 'lmax'} or
          {'kind': 'fixed', 'value'}; lengths in m.
        :param orientation:
          {'kind': 'uniform'} or {'kind': 'two_set', 'angles', 'jitter'};
          angles in degrees from the x axis.
        :param aperture:
          {'kind': 'fixed', 'value'} or {'kind': 'proportional', 'factor'};
          apertures in m, clipped to [1e-4, 1].
        :param seed:
          Seed of the random generator.
        :param deterministic:
          FractureNetwork added verbatim before the stochastic fractures.
        """
        self.domain = make_domain(domain)
        self.count = int(count)
        self.length = dict(length or {'kind': FIXED, 'value': 1.0})
        self.orientation = dict(orientation or {'kind': UNIFORM})
        self.aperture = dict(aperture or {'kind': FIXED, 'value': 1e-3})
        self.seed = int(seed)
        self.deterministic = deterministic
        self._validate()

    def _validate(self):
        if self.count < 0:
            raise ConfigException('Fracture count must be >= 0.')
        kind = self.length.get('kind')
        if kind == POWER_LAW:
            if not self.length['exponent'] > 1:
                raise ConfigException('length.exponent must be > 1.')
            if not 0 < self.length['lmin'] < self.length['lmax']:
                raise ConfigException('length needs 0 < lmin < lmax.')
        elif kind == FIXED:
            if not self.length['value'] > 0:
                raise ConfigException('length.value must be positive.')
        else:
            raise ConfigException('Unknown length kind "%s".' % kind)
        kind = self.orientation.get('kind')
        if kind == TWO_SET:
            if not len(self.orientation.get('angles', [])):
                raise ConfigException('orientation.angles must list at least one angle.')
        elif kind != UNIFORM:
            raise ConfigException('Unknown orientation kind "%s".' % kind)
        kind = self.aperture.get('kind')
        if kind == FIXED:
            if not MIN_APERTURE <= self.aperture['value'] <= MAX_APERTURE:
                raise ConfigException('aperture.value must lie in [%g, %g] m.'
                                      % (MIN_APERTURE, MAX_APERTURE))
        elif kind == PROPORTIONAL:
            if not self.aperture['factor'] > 0:
                raise ConfigException('aperture.factor must be positive.')
        else:
            raise ConfigException('Unknown aperture kind "%s".' % kind)

    @classmethod
    def fromDict(cls, config, network=None):
        """Parse a generator section of a YAML file (quantities carry units)."""
        path = 'generator'
        try:
            domain = [parse_quantity(v, 'length', '%s.domain' % path) for v in config['domain']]
        except KeyError:
            raise ConfigException('%s.domain is required.' % path)
        except TypeError:
            raise ConfigException('%s.domain must be a list of four lengths.' % path)
        if len(domain) != 4:
            raise ConfigException('%s.domain must be a list of four lengths.' % path)
        length = dict(config.get('length', {'kind': FIXED, 'value': '1 m'}))
        if length.get('kind') == POWER_LAW:
            length['exponent'] = parse_number(length.get('exponent'), '%s.length.exponent' % path)
            for key in ('lmin', 'lmax'):
                length[key] = parse_quantity(length.get(key), 'length',
                                             '%s.length.%s' % (path, key))
        elif length.get('kind') == FIXED:
            length['value'] = parse_quantity(length.get('value'), 'length',
                                             '%s.length.value' % path)
        orientation = dict(config.get('orientation', {'kind': UNIFORM}))
        if orientation.get('kind') == TWO_SET:
            orientation['angles'] = [parse_number(a, '%s.orientation.angles' % path)
                                     for a in orientation.get('angles', [])]
            orientation['jitter'] = parse_number(orientation.get('jitter', 0.0),
                                                 '%s.orientation.jitter' % path)
        aperture = dict(config.get('aperture', {'kind': FIXED, 'value': '1 mm'}))
        if aperture.get('kind') == FIXED:
            aperture['value'] = parse_quantity(aperture.get('value'), 'length',
                                               '%s.aperture.value' % path)
        elif aperture.get('kind') == PROPORTIONAL:
            aperture['factor'] = parse_number(aperture.get('factor'),
                                              '%s.aperture.factor' % path, positive=True)
        count = parse_number(config.get('count', 0), '%s.count' % path, integer=True)
        seed = parse_number(config.get('seed', 0), '%s.seed' % path, integer=True)
        return cls(domain, count, length, orientation, aperture, seed, network)


def _orientations(rng, n, orientation):
    if orientation['kind'] == UNIFORM:
        return rng.uniform(0.0, np.pi, n)
    angles = np.radians(np.asarray(orientation['angles'], dtype=float))
    jitter = np.radians(orientation.get('jitter', 0.0))
    picked = angles[rng.integers(0, len(angles), n)]
    return picked + rng.uniform(-jitter, jitter, n) if jitter > 0 else picked


def _apertures(lengths, aperture):
    if aperture['kind'] == FIXED:
        values = np.full(len(lengths), aperture['value'])
    else:
        values = aperture['factor'] * lengths
    return np.clip(values, MIN_APERTURE, MAX_APERTURE)


def generate(spec):
    """Generate a fracture network.

    Deterministic segments are passed through unchanged; stochastic
    segments are clipped to the domain box, and pieces that vanish under
    clipping are dropped with a warning.

    :param spec:
      GenSpec.
    :returns:
      FractureNetwork.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.count
    if spec.length['kind'] == POWER_LAW:
        lengths = sample_power_law(rng, n, spec.length['exponent'],
                                   spec.length['lmin'], spec.length['lmax'])
    else:
        lengths = np.full(n, spec.length['value'])
    d = spec.domain
    mid = np.column_stack([rng.uniform(d.xmin, d.xmax, n), rng.uniform(d.ymin, d.ymax, n)])
    theta = _orientations(rng, n, spec.orientation)
    half = 0.5 * lengths[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    raw = np.stack([mid - half, mid + half], axis=1)
    apertures = _apertures(lengths, spec.aperture)

    box = shapely.box(d.xmin, d.ymin, d.xmax, d.ymax)
    clipped = shapely.intersection(shapely.linestrings(raw), box) if n else []
    segments = []
    kept = []
    dropped = 0
    for idx, geom in enumerate(clipped):
        if geom.is_empty or geom.geom_type != 'LineString' or not geom.length > 0:
            dropped += 1
            continue
        coords = np.asarray(geom.coords)
        segments.append([coords[0], coords[-1]])
        kept.append(apertures[idx])
    if dropped:
        warnings.warn('%i generated fractures vanished when clipped to the domain.' % dropped)

    if spec.deterministic is not None and len(spec.deterministic):
        segments = list(spec.deterministic.segments) + segments
        kept = list(spec.deterministic.apertures) + kept
    network = FractureNetwork(np.array(segments, dtype=float).reshape(-1, 2, 2),
                              np.array(kept, dtype=float))
    logging.info('Generated %i fractures (seed %i, %i dropped)' % (len(network), spec.seed, dropped))
    return network
