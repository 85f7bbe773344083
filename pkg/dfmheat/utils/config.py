# stdlib imports
import copy
import os.path

# third party imports
import yaml

# local imports
from dfmheat.utils.exception import ConfigException


def read_config(configfilename):
    """Read in a YAML scenario file, merged over the user defaults file if one exists.

    :param configfilename:
      Path to a scenario YAML file.
    :returns:
      Dictionary containing configuration parameters.
    :raises:
      ConfigException if the file does not exist or is not a YAML mapping.
    """
    if configfilename is None or not os.path.isfile(configfilename):
        raise ConfigException(
            'Config file could not be found at %s.' % configfilename)
    with open(configfilename, 'rt') as f:
        try:
            config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigException('Could not parse %s: %s' % (configfilename, str(e)))
    if not isinstance(config, dict):
        raise ConfigException('%s does not contain a mapping.' % configfilename)

    defaultsfile = get_config_file()
    if defaultsfile is not None:
        with open(defaultsfile, 'rt') as f:
            defaults = yaml.safe_load(f) or {}
        config = merge_config(defaults, config)
    return config


def merge_config(base, override):
    """Recursively merge two config dictionaries, values in override win.

    :param base:
      Dictionary of default parameters.
    :param override:
      Dictionary of parameters taking precedence.
    :returns:
      New merged dictionary; inputs are not modified.
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def write_config(config, configfilename):
    """Write out config parameters.

    :param config:
      Dictionary with configuration parameters.
    :param configfilename:
      Output YAML file name.
    """
    with open(configfilename, 'wt') as f:
        f.write(yaml.safe_dump(config, default_flow_style=False, sort_keys=True))


def get_config_file():
    """Find and return the user defaults file name, if exists.  None returned if file does not exist.

    :returns:
      config file name, or None if config file does not exist.
    """
    configfilename = os.path.join(
        os.path.expanduser('~'), '.dfmheat', 'config.yml')
    if not os.path.isfile(configfilename):
        return None
    return configfilename
