#!/usr/bin/env python
"""Unit-string parsing for scenario files.

Every dimensional quantity in a scenario carries an explicit unit, e.g.
"0.1 dm^2/s" or "30 yr". Values are converted to SI (temperatures to degC)
at load time; nothing downstream of the config layer sees unit strings.
"""

# stdlib imports
import re

# local imports
from dfmheat.utils.exception import ConfigException

SECONDS_PER_YEAR = 365.25 * 86400.0
DARCY = 9.869233e-13

# each kind maps normalized unit text -> (scale, offset); SI = scale*x + offset
UNITS = {
    'length': {
        'm': (1.0, 0.0),
        'km': (1e3, 0.0),
        'dm': (0.1, 0.0),
        'cm': (1e-2, 0.0),
        'mm': (1e-3, 0.0),
    },
    'time': {
        's': (1.0, 0.0),
        'min': (60.0, 0.0),
        'h': (3600.0, 0.0),
        'hr': (3600.0, 0.0),
        'd': (86400.0, 0.0),
        'day': (86400.0, 0.0),
        'days': (86400.0, 0.0),
        'yr': (SECONDS_PER_YEAR, 0.0),
        'year': (SECONDS_PER_YEAR, 0.0),
        'years': (SECONDS_PER_YEAR, 0.0),
    },
    # 2D rates are per unit depth
    'rate': {
        'm^2/s': (1.0, 0.0),
        'dm^2/s': (1e-2, 0.0),
        'cm^2/s': (1e-4, 0.0),
        'm^2/d': (1.0 / 86400.0, 0.0),
        'm^2/day': (1.0 / 86400.0, 0.0),
    },
    'permeability': {
        'm^2': (1.0, 0.0),
        'D': (DARCY, 0.0),
        'darcy': (DARCY, 0.0),
        'mD': (DARCY * 1e-3, 0.0),
        'md': (DARCY * 1e-3, 0.0),
    },
    'viscosity': {
        'Pa*s': (1.0, 0.0),
        'Pas': (1.0, 0.0),
        'mPa*s': (1e-3, 0.0),
        'cP': (1e-3, 0.0),
        'cp': (1e-3, 0.0),
        'P': (0.1, 0.0),
    },
    'heat_capacity': {
        'J/m^3/K': (1.0, 0.0),
        'J/m^3K': (1.0, 0.0),
        'J/m^3*K': (1.0, 0.0),
        'kJ/m^3/K': (1e3, 0.0),
        'kJ/m^3K': (1e3, 0.0),
        'kJ/m^3*K': (1e3, 0.0),
        'MJ/m^3/K': (1e6, 0.0),
        'MJ/m^3K': (1e6, 0.0),
        'MJ/m^3*K': (1e6, 0.0),
    },
    'conductivity': {
        'W/m/K': (1.0, 0.0),
        'W/mK': (1.0, 0.0),
        'W/m*K': (1.0, 0.0),
        'J/mKs': (1.0, 0.0),
        'J/m*K*s': (1.0, 0.0),
        'J/m/K/s': (1.0, 0.0),
    },
    'temperature': {
        'C': (1.0, 0.0),
        'degC': (1.0, 0.0),
        'K': (1.0, -273.15),
    },
    'pressure': {
        'Pa': (1.0, 0.0),
        'kPa': (1e3, 0.0),
        'MPa': (1e6, 0.0),
        'bar': (1e5, 0.0),
    },
    'well_index': {
        'm^2/Pa/s': (1.0, 0.0),
        'm^2/Pa*s': (1.0, 0.0),
    },
}

QUANTITY_RE = re.compile(r'^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$')


def _normalize(unit):
    unit = unit.replace('·', '*').replace('°', '')
    unit = unit.replace('(', '').replace(')', '')
    return ''.join(unit.split())


def parse_quantity(value, kind, path='value'):
    """Convert a quantity string like "1 dm^2/s" to SI.

    :param value:
      String with number and unit. Plain numbers are rejected for
      dimensional kinds.
    :param kind:
      One of the keys of UNITS.
    :param path:
      Dotted config path, used in error messages.
    :returns:
      Float value in SI units (degC for temperatures).
    :raises:
      ConfigException for unknown kinds, missing or unknown units.
    """
    if kind not in UNITS:
        raise ConfigException('%s: unknown quantity kind "%s"' % (path, kind))
    if isinstance(value, bool) or not isinstance(value, str):
        raise ConfigException('%s: %r is missing a unit (expected one of %s)'
                              % (path, value, ', '.join(sorted(UNITS[kind]))))
    match = QUANTITY_RE.match(value)
    if match is None:
        raise ConfigException('%s: cannot parse quantity "%s"' % (path, value))
    number, unit = match.groups()
    if not unit:
        raise ConfigException('%s: "%s" is missing a unit' % (path, value))
    unit = _normalize(unit)
    if unit not in UNITS[kind]:
        raise ConfigException('%s: unit "%s" is not a valid %s unit'
                              % (path, unit, kind.replace('_', ' ')))
    scale, offset = UNITS[kind][unit]
    return float(number) * scale + offset


def parse_number(value, path='value', positive=False, integer=False):
    """Validate a dimensionless number from a config file."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigException('%s: expected a number, got %r' % (path, value))
    if integer and int(value) != value:
        raise ConfigException('%s: expected an integer, got %r' % (path, value))
    if positive and value <= 0:
        raise ConfigException('%s: must be positive' % path)
    return int(value) if integer else float(value)


def seconds_to_years(seconds):
    return seconds / SECONDS_PER_YEAR
