#!/usr/bin/env python

# third party imports
import numpy as np
import pytest
from scipy import stats

# local imports
from dfmheat.models.fracgen import (MAX_APERTURE, MIN_APERTURE, GenSpec, generate,
                                    power_law_cdf, sample_power_law)
from dfmheat.models.grid import FractureNetwork
from dfmheat.utils.exception import ConfigException

DOMAIN = (0.0, 1000.0, 0.0, 1000.0)
POWER = {'kind': 'power_law', 'exponent': 2.5, 'lmin': 20.0, 'lmax': 400.0}


def test_power_law_sampling():
    print('Testing truncated power-law lengths...')
    rng = np.random.default_rng(42)
    lengths = sample_power_law(rng, 5000, 2.5, 20.0, 400.0)
    assert lengths.min() >= 20.0 and lengths.max() <= 400.0
    result = stats.kstest(lengths, lambda x: power_law_cdf(x, 2.5, 20.0, 400.0))
    assert result.pvalue > 1e-3
    np.testing.assert_allclose(power_law_cdf(np.array([20.0, 400.0]), 2.5, 20.0, 400.0),
                               [0.0, 1.0])
    with pytest.raises(ConfigException):
        sample_power_law(rng, 10, 1.0, 20.0, 400.0)
    with pytest.raises(ConfigException):
        sample_power_law(rng, 10, 2.5, 400.0, 20.0)
    print('Passed truncated power-law lengths.')


def test_generate():
    print('Testing stochastic network generation...')
    spec = GenSpec(DOMAIN, count=200, length=POWER,
                   aperture={'kind': 'proportional', 'factor': 2e-6}, seed=3)
    network = generate(spec)
    assert 0 < len(network) <= 200
    xy = network.segments.reshape(-1, 2)
    assert (xy >= -1e-9).all() and (xy <= 1000.0 + 1e-9).all()
    assert (network.apertures >= MIN_APERTURE).all()
    assert (network.apertures <= MAX_APERTURE).all()

    # same seed, same network; another seed, another network
    again = generate(GenSpec(DOMAIN, count=200, length=POWER,
                             aperture={'kind': 'proportional', 'factor': 2e-6}, seed=3))
    np.testing.assert_array_equal(network.segments, again.segments)
    other = generate(GenSpec(DOMAIN, count=200, length=POWER,
                             aperture={'kind': 'proportional', 'factor': 2e-6}, seed=4))
    assert not np.array_equal(network.segments[:10], other.segments[:10])
    print('Passed stochastic network generation.')


def test_two_set_orientation():
    spec = GenSpec(DOMAIN, count=50, length={'kind': 'fixed', 'value': 50.0},
                   orientation={'kind': 'two_set', 'angles': [0.0, 90.0], 'jitter': 0.0},
                   seed=1)
    network = generate(spec)
    d = network.segments[:, 1, :] - network.segments[:, 0, :]
    horizontal = np.abs(d[:, 1]) < 1e-6
    vertical = np.abs(d[:, 0]) < 1e-6
    assert (horizontal | vertical).all()
    np.testing.assert_allclose(network.apertures, 1e-3)


def test_deterministic_first():
    fixed = FractureNetwork([[[0.0, 500.0], [1000.0, 500.0]]], [5e-3])
    network = generate(GenSpec(DOMAIN, count=10, length=POWER, seed=0, deterministic=fixed))
    np.testing.assert_allclose(network.segments[0], fixed.segments[0])
    np.testing.assert_allclose(network.apertures[0], 5e-3)
    only = generate(GenSpec(DOMAIN, count=0, deterministic=fixed))
    assert len(only) == 1


def test_from_dict():
    print('Testing generator sections with units...')
    config = {
        'domain': ['0 m', '1 km', '0 m', '1 km'],
        'count': 20,
        'seed': 7,
        'length': {'kind': 'power_law', 'exponent': 2.5, 'lmin': '20 m', 'lmax': '400 m'},
        'orientation': {'kind': 'two_set', 'angles': [30, 120], 'jitter': 15},
        'aperture': {'kind': 'fixed', 'value': '1 mm'},
    }
    spec = GenSpec.fromDict(config)
    assert spec.count == 20 and spec.seed == 7
    np.testing.assert_allclose(spec.domain, DOMAIN)
    np.testing.assert_allclose([spec.length['lmin'], spec.length['lmax']], [20.0, 400.0])
    np.testing.assert_allclose(spec.aperture['value'], 1e-3)

    for key, value in [('count', -1), ('count', 2.5),
                       ('length', {'kind': 'lognormal'}),
                       ('orientation', {'kind': 'two_set', 'angles': []}),
                       ('aperture', {'kind': 'fixed', 'value': '5 m'}),
                       ('domain', ['0 m', '1 km'])]:
        bad = dict(config)
        bad[key] = value
        with pytest.raises(ConfigException):
            GenSpec.fromDict(bad)
    with pytest.raises(ConfigException):
        GenSpec.fromDict({'count': 3})
    print('Passed generator sections with units.')


if __name__ == '__main__':
    test_power_law_sampling()
    test_generate()
    test_two_set_orientation()
    test_deterministic_first()
    test_from_dict()
