#!/usr/bin/env python

# third party imports
import matplotlib

# this allows us to have a non-interactive backend - essential on systems without a display
matplotlib.use('Agg')

import matplotlib.pyplot as plt
import numpy as np

# local imports
from dfmheat.utils.exception import DFMException
from dfmheat.utils.units import seconds_to_years

WIDTH = 7.0
HEIGHT = 4.5

STYLES = {
    'fine': {'color': 'k', 'linestyle': '-', 'linewidth': 2.0},
    'constant': {'color': '#FF9900', 'linestyle': '--', 'linewidth': 1.5},
    'smoothed': {'color': '#0066CC', 'linestyle': '-.', 'linewidth': 1.5},
}


def _style(label):
    return STYLES.get(label, {'linewidth': 1.5})


def draw_production_curves(results, filename, title=None):
    """Plot production temperature against time for several runs.

    :param results:
      Dict label -> TransportResult ('fine', 'constant', 'smoothed', ...).
    :param filename:
      Output PNG file.
    :param title:
      Optional plot title.
    :returns:
      filename.
    """
    if not results:
        raise DFMException('No runs to plot.')
    fig, ax = plt.subplots(figsize=(WIDTH, HEIGHT))
    for label, result in results.items():
        ax.plot(seconds_to_years(result.step_times), result.production,
                label=label, **_style(label))
    ax.set_xlabel('Time (years)')
    ax.set_ylabel('Production temperature ($^\\circ$C)')
    ax.grid(True, alpha=0.3)
    ax.legend(loc='best')
    if title is not None:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(filename, dpi=150)
    plt.close(fig)
    return filename


def draw_error_curves(errors, filename, title=None):
    """Plot the relative energy error eps(t) per basis mode on a log axis.

    :param errors:
      Dict mode -> (times in s, eps).
    """
    if not errors:
        raise DFMException('No error series to plot.')
    fig, ax = plt.subplots(figsize=(WIDTH, HEIGHT))
    for label, (times, eps) in errors.items():
        eps = np.asarray(eps, dtype=float)
        keep = eps > 0
        ax.semilogy(seconds_to_years(np.asarray(times))[keep], eps[keep], label=label,
                    marker='o', markersize=3, **_style(label))
    ax.set_xlabel('Time (years)')
    ax.set_ylabel('Relative energy error')
    ax.grid(True, which='both', alpha=0.3)
    ax.legend(loc='best')
    if title is not None:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(filename, dpi=150)
    plt.close(fig)
    return filename


def draw_cell_field(grid, values, filename, label='', cmap='viridis', title=None):
    """Scatter map of a per-cell field.

    Matrix cells are drawn as squares at their centers, fracture cells on
    top as small dots.
    """
    values = np.asarray(values, dtype=float)
    if len(values) != grid.cell_count:
        raise DFMException('Field has %i values for %i cells.' % (len(values), grid.cell_count))
    matrix = grid.matrixCells()
    frac = grid.fractureCells()
    vmin, vmax = np.nanmin(values), np.nanmax(values)
    fig, ax = plt.subplots(figsize=(HEIGHT + 1.0, HEIGHT))
    # marker area scales with cell size in points^2
    size = max(2.0, 4e4 / max(len(matrix), 1))
    sc = ax.scatter(grid.center[matrix, 0], grid.center[matrix, 1], c=values[matrix],
                    s=size, marker='s', cmap=cmap, vmin=vmin, vmax=vmax, linewidths=0)
    if len(frac):
        ax.scatter(grid.center[frac, 0], grid.center[frac, 1], c=values[frac], s=size / 4,
                   marker='o', cmap=cmap, vmin=vmin, vmax=vmax, linewidths=0)
    fig.colorbar(sc, ax=ax, label=label)
    ax.set_aspect('equal')
    ax.set_xlabel('x (m)')
    ax.set_ylabel('y (m)')
    if title is not None:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(filename, dpi=150)
    plt.close(fig)
    return filename
