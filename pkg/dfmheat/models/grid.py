#!/usr/bin/env python

# stdlib imports
from collections import namedtuple
import logging
import warnings

# third party imports
import numpy as np
import shapely
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

# local imports
from dfmheat.utils.exception import GridException

MATRIX = 0
FRACTURE = 1
INTERSECTION = 2

SNAP_TOL = 1e-9

Domain = namedtuple('Domain', ['xmin', 'xmax', 'ymin', 'ymax'])


def make_domain(domain):
    """Coerce a 4-sequence (xmin, xmax, ymin, ymax) into a validated Domain."""
    domain = Domain(*[float(v) for v in domain])
    if domain.xmax <= domain.xmin or domain.ymax <= domain.ymin:
        raise GridException('Degenerate domain %s' % str(tuple(domain)))
    return domain


class FractureNetwork(object):
    def __init__(self, segments, apertures):
        """A set of straight fracture segments with hydraulic apertures.

        :param segments:
          Array-like of shape (k, 2, 2): endpoints ((x1, y1), (x2, y2)) in m.
        :param apertures:
          Array-like of k apertures in m, all positive.
        """
        segments = np.asarray(segments, dtype=float).reshape(-1, 2, 2)
        apertures = np.asarray(apertures, dtype=float).reshape(-1)
        if len(segments) != len(apertures):
            raise GridException('Got %i segments but %i apertures.'
                                % (len(segments), len(apertures)))
        bad = np.nonzero(~(apertures > 0))[0]
        if len(bad):
            raise GridException('Segment %i has non-positive aperture %g.'
                                % (bad[0], apertures[bad[0]]))
        self.segments = segments
        self.apertures = apertures

    def __len__(self):
        return len(self.apertures)

    def lengths(self):
        return np.hypot(*(self.segments[:, 1, :] - self.segments[:, 0, :]).T)

    def checkDomain(self, domain, tol=SNAP_TOL):
        """Raise GridException if any endpoint lies outside the domain rectangle."""
        x = self.segments[:, :, 0]
        y = self.segments[:, :, 1]
        outside = ((x < domain.xmin - tol) | (x > domain.xmax + tol) |
                   (y < domain.ymin - tol) | (y > domain.ymax + tol)).any(axis=1)
        if outside.any():
            idx = np.nonzero(outside)[0][0]
            raise GridException('Segment %i has an endpoint outside the domain.' % idx)

    def intersections(self):
        """Return an array of points where two segments cross or touch."""
        if len(self) < 2:
            return np.zeros((0, 2))
        lines = shapely.linestrings(self.segments)
        tree = shapely.STRtree(lines)
        left, right = tree.query(lines, predicate='intersects')
        keep = left < right
        points = []
        for i, j in zip(left[keep], right[keep]):
            inter = shapely.intersection(lines[i], lines[j])
            for geom in getattr(inter, 'geoms', [inter]):
                if geom.geom_type == 'Point':
                    points.append((geom.x, geom.y))
        if not len(points):
            return np.zeros((0, 2))
        return np.unique(np.array(points), axis=0)


class FineGrid(object):
    def __init__(self, kind, center, measure, aperture,
                 conn_cells, conn_area, conn_dist, conn_normal, conn_star,
                 bnd_cell, bnd_area, bnd_normal, bnd_dist, bnd_tag,
                 cell_nodes, node_coords=None, fracture_segments=None,
                 metadata=None):
        """Discrete fracture-matrix grid: 2D matrix cells plus 1D fracture cells.

        Connections are stored once per unordered pair.  conn_star holds -1
        for ordinary connections, or the id of the eliminated fracture
        intersection for fracture-fracture connections produced by star-delta
        elimination; the transmissibility of those is computed from all
        branches sharing the id.

        :raises:
          GridException if any grid invariant is violated.
        """
        self.kind = np.asarray(kind, dtype=np.int64)
        self.center = np.asarray(center, dtype=float).reshape(-1, 2)
        self.measure = np.asarray(measure, dtype=float)
        self.aperture = np.asarray(aperture, dtype=float)
        self.conn_cells = np.asarray(conn_cells, dtype=np.int64).reshape(-1, 2)
        self.conn_area = np.asarray(conn_area, dtype=float)
        self.conn_dist = np.asarray(conn_dist, dtype=float).reshape(-1, 2)
        self.conn_normal = np.asarray(conn_normal, dtype=float).reshape(-1, 2)
        self.conn_star = np.asarray(conn_star, dtype=np.int64)
        self.bnd_cell = np.asarray(bnd_cell, dtype=np.int64)
        self.bnd_area = np.asarray(bnd_area, dtype=float)
        self.bnd_normal = np.asarray(bnd_normal, dtype=float).reshape(-1, 2)
        self.bnd_dist = np.asarray(bnd_dist, dtype=float)
        self.bnd_tag = np.asarray(bnd_tag, dtype='<U16')
        lengths = np.array([len(c) for c in cell_nodes], dtype=np.int64)
        self.nodes_indptr = np.concatenate([[0], np.cumsum(lengths)])
        if len(cell_nodes):
            self.nodes_indices = np.concatenate(
                [np.asarray(c, dtype=np.int64) for c in cell_nodes])
        else:
            self.nodes_indices = np.zeros(0, dtype=np.int64)
        self.node_coords = None
        if node_coords is not None:
            self.node_coords = np.asarray(node_coords, dtype=float).reshape(-1, 2)
        self.fracture_segments = None
        if fracture_segments is not None:
            self.fracture_segments = np.asarray(
                fracture_segments, dtype=float).reshape(-1, 2, 2)
        self.metadata = dict(metadata or {})
        self._validate()
        for value in self.__dict__.values():
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
        self._adjacency = None

    @property
    def cell_count(self):
        return len(self.kind)

    @property
    def conn_count(self):
        return len(self.conn_cells)

    def fractureCells(self):
        return np.nonzero(self.kind == FRACTURE)[0]

    def matrixCells(self):
        return np.nonzero(self.kind == MATRIX)[0]

    def cellNodes(self, cell):
        return self.nodes_indices[self.nodes_indptr[cell]:self.nodes_indptr[cell + 1]]

    def alongFracture(self):
        """Mask of connections joining two fracture cells."""
        kinds = self.kind[self.conn_cells]
        return (kinds[:, 0] == FRACTURE) & (kinds[:, 1] == FRACTURE)

    def adjacency(self):
        """Symmetric boolean connection graph as a CSR matrix."""
        if self._adjacency is None:
            n = self.cell_count
            i, j = self.conn_cells.T
            data = np.ones(2 * len(i), dtype=bool)
            adj = sparse.csr_matrix((data, (np.concatenate([i, j]),
                                            np.concatenate([j, i]))), shape=(n, n))
            self._adjacency = adj
        return self._adjacency

    def nodeIncidence(self):
        """Cell-by-node boolean incidence matrix (N_f x n_nodes)."""
        n_nodes = int(self.nodes_indices.max()) + 1 if len(self.nodes_indices) else 0
        data = np.ones(len(self.nodes_indices), dtype=bool)
        return sparse.csr_matrix((data, self.nodes_indices, self.nodes_indptr),
                                 shape=(self.cell_count, n_nodes))

    def fractureBoundaryCells(self):
        """Fracture cells owning at least one outer boundary face."""
        cells = self.bnd_cell[self.kind[self.bnd_cell] == FRACTURE]
        return np.unique(cells)

    def matrixArea(self):
        return self.measure[self.kind == MATRIX].sum()

    def allclose(self, other, atol=1e-12):
        """Compare two grids: indices exactly, geometry to atol."""
        int_fields = ['kind', 'conn_cells', 'conn_star', 'bnd_cell',
                      'nodes_indptr', 'nodes_indices']
        float_fields = ['center', 'measure', 'conn_area', 'conn_dist',
                        'conn_normal', 'bnd_area', 'bnd_normal', 'bnd_dist']
        for field in int_fields:
            a, b = getattr(self, field), getattr(other, field)
            if a.shape != b.shape or not np.array_equal(a, b):
                return False
        for field in float_fields:
            a, b = getattr(self, field), getattr(other, field)
            if a.shape != b.shape or not np.allclose(a, b, rtol=0, atol=atol):
                return False
        frac = self.kind == FRACTURE
        if not np.allclose(self.aperture[frac], other.aperture[frac], rtol=0, atol=atol):
            return False
        return np.array_equal(self.bnd_tag, other.bnd_tag)

    def _validate(self):
        n = len(self.kind)
        if n == 0:
            raise GridException('Grid has no cells.')
        for name in ['center', 'measure', 'aperture']:
            if len(getattr(self, name)) != n:
                raise GridException('Field %s has %i entries for %i cells.'
                                    % (name, len(getattr(self, name)), n))
        if len(self.nodes_indptr) != n + 1:
            raise GridException('Node sets given for %i of %i cells.'
                                % (len(self.nodes_indptr) - 1, n))
        if (self.kind == INTERSECTION).any():
            raise GridException('Intersection cells must be eliminated before use.')
        if not np.isin(self.kind, [MATRIX, FRACTURE]).all():
            raise GridException('Unknown cell kind in grid.')
        if not (self.measure > 0).all():
            raise GridException('Cell %i has non-positive measure.'
                                % np.nonzero(~(self.measure > 0))[0][0])
        frac = self.kind == FRACTURE
        if not (self.aperture[frac] > 0).all():
            raise GridException('Fracture cell %i has non-positive aperture.'
                                % np.nonzero(frac & ~(self.aperture > 0))[0][0])
        m = len(self.conn_cells)
        for name in ['conn_area', 'conn_dist', 'conn_normal', 'conn_star']:
            if len(getattr(self, name)) != m:
                raise GridException('Connection field %s has wrong length.' % name)
        if m:
            if self.conn_cells.min() < 0 or self.conn_cells.max() >= n:
                bad = np.nonzero(((self.conn_cells < 0) | (self.conn_cells >= n)).any(axis=1))[0][0]
                raise GridException('Connection %i references a cell outside 0..%i.'
                                    % (bad, n - 1))
            if (self.conn_cells[:, 0] == self.conn_cells[:, 1]).any():
                raise GridException('Connection from a cell to itself.')
            if not (self.conn_dist > 0).all():
                bad = np.nonzero(~(self.conn_dist > 0).all(axis=1))[0][0]
                raise GridException('Connection %i has non-positive center distance.' % bad)
            if not (self.conn_area > 0).all():
                bad = np.nonzero(~(self.conn_area > 0))[0][0]
                raise GridException('Connection %i has non-positive area.' % bad)
            pairs = np.sort(self.conn_cells, axis=1)
            if len(np.unique(pairs, axis=0)) != m:
                raise GridException('Connection list contains a duplicated cell pair.')
        b = len(self.bnd_cell)
        for name in ['bnd_area', 'bnd_normal', 'bnd_dist', 'bnd_tag']:
            if len(getattr(self, name)) != b:
                raise GridException('Boundary field %s has wrong length.' % name)
        if b and (self.bnd_cell.min() < 0 or self.bnd_cell.max() >= n):
            raise GridException('Boundary face references a cell outside 0..%i.' % (n - 1))
        if b and not (self.bnd_area > 0).all():
            raise GridException('Boundary face with non-positive area.')
        if self.fracture_segments is not None and len(self.fracture_segments) != frac.sum():
            raise GridException('Got %i fracture segments for %i fracture cells.'
                                % (len(self.fracture_segments), frac.sum()))
        ncomp, _ = connected_components(self._rawAdjacency(), directed=False)
        if ncomp != 1:
            raise GridException('Grid connectivity graph has %i components.' % ncomp)

    def _rawAdjacency(self):
        n = len(self.kind)
        i, j = self.conn_cells.T
        return sparse.coo_matrix((np.ones(len(i)), (i, j)), shape=(n, n))


def build_cartesian_dfm(domain, nx, ny, network):
    """Build a Cartesian DFM grid whose fractures follow grid lines.

    :param domain:
      (xmin, xmax, ymin, ymax) in m.
    :param nx:
      Number of matrix cells in x.
    :param ny:
      Number of matrix cells in y.
    :param network:
      FractureNetwork with axis-aligned segments whose endpoints lie on grid nodes.
    :returns:
      FineGrid with one fracture cell per covered fine edge.
    :raises:
      GridException on non-axis-aligned or off-grid segments.
    """
    domain = make_domain(domain)
    dx = (domain.xmax - domain.xmin) / nx
    dy = (domain.ymax - domain.ymin) / ny
    network.checkDomain(domain)
    hap = np.zeros((ny + 1, nx))
    vap = np.zeros((ny, nx + 1))
    for idx, ((x1, y1), (x2, y2)) in enumerate(network.segments):
        aperture = network.apertures[idx]
        horizontal = abs(y1 - y2) <= SNAP_TOL
        vertical = abs(x1 - x2) <= SNAP_TOL
        if horizontal and vertical:
            raise GridException('Segment %i has zero length.' % idx)
        if not (horizontal or vertical):
            raise GridException('Segment %i is not axis-aligned.' % idx)
        i1, j1 = _snap(x1, domain.xmin, dx, idx), _snap(y1, domain.ymin, dy, idx)
        i2, j2 = _snap(x2, domain.xmin, dx, idx), _snap(y2, domain.ymin, dy, idx)
        if horizontal:
            lo, hi = sorted([i1, i2])
            hap[j1, lo:hi] = np.maximum(hap[j1, lo:hi], aperture)
        else:
            lo, hi = sorted([j1, j2])
            vap[lo:hi, i1] = np.maximum(vap[lo:hi, i1], aperture)
    return _build_from_edges(domain, nx, ny, hap, vap, {'mesher': 'cartesian'})


def rasterize_network(domain, nx, ny, network):
    """Snap arbitrary fracture segments onto fine grid edges.

    Each segment becomes a 4-connected staircase of edges between the grid
    nodes nearest its endpoints, always stepping to the node closest to the
    true segment line.  The result is approximate and flagged as such in
    the grid metadata.

    :param domain:
      (xmin, xmax, ymin, ymax) in m.
    :param nx:
      Number of matrix cells in x.
    :param ny:
      Number of matrix cells in y.
    :param network:
      FractureNetwork of arbitrary segments inside the domain.
    :returns:
      FineGrid with metadata['approximate'] set.
    """
    domain = make_domain(domain)
    dx = (domain.xmax - domain.xmin) / nx
    dy = (domain.ymax - domain.ymin) / ny
    network.checkDomain(domain)
    hap = np.zeros((ny + 1, nx))
    vap = np.zeros((ny, nx + 1))
    dropped = 0
    for idx, ((x1, y1), (x2, y2)) in enumerate(network.segments):
        aperture = network.apertures[idx]
        i = int(np.clip(np.round((x1 - domain.xmin) / dx), 0, nx))
        j = int(np.clip(np.round((y1 - domain.ymin) / dy), 0, ny))
        iend = int(np.clip(np.round((x2 - domain.xmin) / dx), 0, nx))
        jend = int(np.clip(np.round((y2 - domain.ymin) / dy), 0, ny))
        if i == iend and j == jend:
            dropped += 1
            continue
        # distance of a node to the segment's supporting line
        tx, ty = x2 - x1, y2 - y1
        norm = np.hypot(tx, ty)

        def offset(ii, jj):
            px = domain.xmin + ii * dx - x1
            py = domain.ymin + jj * dy - y1
            return abs(px * ty - py * tx) / norm

        si = int(np.sign(iend - i))
        sj = int(np.sign(jend - j))
        while i != iend or j != jend:
            step_x = i != iend
            if step_x and j != jend:
                step_x = offset(i + si, j) <= offset(i, j + sj)
            if step_x:
                col = min(i, i + si)
                hap[j, col] = max(hap[j, col], aperture)
                i += si
            else:
                row = min(j, j + sj)
                vap[row, i] = max(vap[row, i], aperture)
                j += sj
    if dropped:
        warnings.warn('%i fracture segments shorter than a grid cell were dropped '
                      'during rasterization.' % dropped)
    return _build_from_edges(domain, nx, ny, hap, vap,
                             {'mesher': 'rasterized', 'approximate': True})


def _snap(value, origin, spacing, idx):
    k = int(np.round((value - origin) / spacing))
    if abs(origin + k * spacing - value) > SNAP_TOL:
        raise GridException('Segment %i does not lie on the grid lines '
                            '(coordinate %.12g).' % (idx, value))
    return k


def _build_from_edges(domain, nx, ny, hap, vap, metadata):
    dx = (domain.xmax - domain.xmin) / nx
    dy = (domain.ymax - domain.ymin) / ny
    nm = nx * ny

    def node(i, j):
        return j * (nx + 1) + i

    def cell(i, j):
        return j * nx + i

    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing='ij')
    ii = ii.ravel()
    jj = jj.ravel()
    centers = [np.column_stack([domain.xmin + (ii + 0.5) * dx,
                                domain.ymin + (jj + 0.5) * dy])]
    measure = [np.full(nm, dx * dy)]
    aperture = [np.full(nm, np.nan)]
    kind = [np.full(nm, MATRIX)]
    cell_nodes = [np.array([node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)])
                  for i, j in zip(ii, jj)]

    # fracture cells: horizontal edges first, then vertical, row-major
    hj, hi = np.nonzero(hap > 0)
    vj, vi = np.nonzero(vap > 0)
    nh, nv = len(hj), len(vj)
    hidx = np.full(hap.shape, -1, dtype=np.int64)
    vidx = np.full(vap.shape, -1, dtype=np.int64)
    hidx[hj, hi] = nm + np.arange(nh)
    vidx[vj, vi] = nm + nh + np.arange(nv)
    ha = hap[hj, hi]
    va = vap[vj, vi]
    hx0 = domain.xmin + hi * dx
    hy0 = domain.ymin + hj * dy
    vx0 = domain.xmin + vi * dx
    vy0 = domain.ymin + vj * dy
    centers.append(np.column_stack([hx0 + 0.5 * dx, hy0]))
    centers.append(np.column_stack([vx0, vy0 + 0.5 * dy]))
    measure += [dx * ha, dy * va]
    aperture += [ha, va]
    kind += [np.full(nh, FRACTURE), np.full(nv, FRACTURE)]
    cell_nodes += [np.array([node(i, j), node(i + 1, j)]) for i, j in zip(hi, hj)]
    cell_nodes += [np.array([node(i, j), node(i, j + 1)]) for i, j in zip(vi, vj)]
    segments = np.concatenate([
        np.stack([np.column_stack([hx0, hy0]), np.column_stack([hx0 + dx, hy0])], axis=1),
        np.stack([np.column_stack([vx0, vy0]), np.column_stack([vx0, vy0 + dy])], axis=1),
    ]).reshape(-1, 2, 2)

    conns = []      # (i, j, area, d_i, d_j, nx, ny, star)
    # matrix-matrix across unfractured interior vertical edges
    vj_all, vi_all = np.meshgrid(np.arange(ny), np.arange(1, nx), indexing='ij')
    vj_all, vi_all = vj_all.ravel(), vi_all.ravel()
    open_v = vap[vj_all, vi_all] == 0
    left = cell(vi_all - 1, vj_all)
    right = cell(vi_all, vj_all)
    conns.append(_conn_block(left[open_v], right[open_v], dy, 0.5 * dx, 0.5 * dx, (1.0, 0.0)))
    hj_all, hi_all = np.meshgrid(np.arange(1, ny), np.arange(nx), indexing='ij')
    hj_all, hi_all = hj_all.ravel(), hi_all.ravel()
    open_h = hap[hj_all, hi_all] == 0
    below = cell(hi_all, hj_all - 1)
    above = cell(hi_all, hj_all)
    conns.append(_conn_block(below[open_h], above[open_h], dx, 0.5 * dy, 0.5 * dy, (0.0, 1.0)))

    # matrix-fracture through the fracture cell's faces
    sel = hj >= 1
    conns.append(_conn_block(cell(hi[sel], hj[sel] - 1), hidx[hj[sel], hi[sel]], dx,
                             0.5 * dy, 0.5 * ha[sel], (0.0, 1.0)))
    sel = hj < ny
    conns.append(_conn_block(cell(hi[sel], hj[sel]), hidx[hj[sel], hi[sel]], dx,
                             0.5 * dy, 0.5 * ha[sel], (0.0, -1.0)))
    sel = vi >= 1
    conns.append(_conn_block(cell(vi[sel] - 1, vj[sel]), vidx[vj[sel], vi[sel]], dy,
                             0.5 * dx, 0.5 * va[sel], (1.0, 0.0)))
    sel = vi < nx
    conns.append(_conn_block(cell(vi[sel], vj[sel]), vidx[vj[sel], vi[sel]], dy,
                             0.5 * dx, 0.5 * va[sel], (-1.0, 0.0)))

    # fracture-fracture through shared grid nodes
    frac_cells = np.concatenate([hidx[hj, hi], vidx[vj, vi]])
    frac_nodes = np.concatenate([
        np.column_stack([node(hi, hj), node(hi + 1, hj)]),
        np.column_stack([node(vi, vj), node(vi, vj + 1)]),
    ]).reshape(-1, 2)
    half = np.concatenate([np.full(nh, 0.5 * dx), np.full(nv, 0.5 * dy)])
    frac_ap = np.concatenate([ha, va])
    allcenters = np.concatenate(centers)
    ff, nstars = _fracture_junctions(frac_cells, frac_nodes, half, frac_ap, allcenters)
    conns.append(ff)

    conns = np.concatenate([c for c in conns if len(c)]) if any(len(c) for c in conns) \
        else np.zeros((0, 8))

    # boundary faces
    bnd = []
    for tag, sel, normal, area, dist in [
            ('left', ii == 0, (-1.0, 0.0), dy, 0.5 * dx),
            ('right', ii == nx - 1, (1.0, 0.0), dy, 0.5 * dx),
            ('bottom', jj == 0, (0.0, -1.0), dx, 0.5 * dy),
            ('top', jj == ny - 1, (0.0, 1.0), dx, 0.5 * dy)]:
        cells = cell(ii[sel], jj[sel])
        if tag in ('left', 'right'):
            col = 0 if tag == 'left' else nx
            covered = vap[jj[sel], col] > 0
        else:
            row = 0 if tag == 'bottom' else ny
            covered = hap[row, ii[sel]] > 0
        cells = cells[~covered]
        bnd.append((cells, np.full(len(cells), area), np.tile(normal, (len(cells), 1)),
                    np.full(len(cells), dist), np.full(len(cells), tag)))
    # fracture cells lying on the boundary, and fracture ends meeting it
    for tag, sel, cells_, normal, area, dist in [
            ('bottom', hj == 0, hidx[hj, hi], (0.0, -1.0), dx, 0.5 * ha),
            ('top', hj == ny, hidx[hj, hi], (0.0, 1.0), dx, 0.5 * ha),
            ('left', vi == 0, vidx[vj, vi], (-1.0, 0.0), dy, 0.5 * va),
            ('right', vi == nx, vidx[vj, vi], (1.0, 0.0), dy, 0.5 * va),
            ('left', hi == 0, hidx[hj, hi], (-1.0, 0.0), ha, np.full(nh, 0.5 * dx)),
            ('right', hi == nx - 1, hidx[hj, hi], (1.0, 0.0), ha, np.full(nh, 0.5 * dx)),
            ('bottom', vj == 0, vidx[vj, vi], (0.0, -1.0), va, np.full(nv, 0.5 * dy)),
            ('top', vj == ny - 1, vidx[vj, vi], (0.0, 1.0), va, np.full(nv, 0.5 * dy))]:
        area = np.broadcast_to(area, sel.shape)[sel]
        dist = np.broadcast_to(dist, sel.shape)[sel]
        cells = cells_[sel]
        bnd.append((cells, area, np.tile(normal, (len(cells), 1)), dist,
                    np.full(len(cells), tag)))
    bnd_cell = np.concatenate([b[0] for b in bnd]).astype(np.int64)
    bnd_area = np.concatenate([b[1] for b in bnd])
    bnd_normal = np.concatenate([b[2] for b in bnd]).reshape(-1, 2)
    bnd_dist = np.concatenate([b[3] for b in bnd])
    bnd_tag = np.concatenate([b[4] for b in bnd])

    nodes_x, nodes_y = np.meshgrid(domain.xmin + np.arange(nx + 1) * dx,
                                   domain.ymin + np.arange(ny + 1) * dy)
    node_coords = np.column_stack([nodes_x.ravel(), nodes_y.ravel()])
    metadata = dict(metadata)
    metadata.update({'domain': list(domain), 'nx': nx, 'ny': ny,
                     'intersections': nstars})
    logging.debug('Built %ix%i DFM grid with %i fracture cells and %i stars.'
                  % (nx, ny, nh + nv, nstars))
    return FineGrid(np.concatenate(kind), allcenters, np.concatenate(measure),
                    np.concatenate(aperture), conns[:, :2].astype(np.int64), conns[:, 2],
                    conns[:, 3:5], conns[:, 5:7], conns[:, 7].astype(np.int64),
                    bnd_cell, bnd_area, bnd_normal, bnd_dist, bnd_tag,
                    cell_nodes, node_coords=node_coords, fracture_segments=segments,
                    metadata=metadata)


def _conn_block(ci, cj, area, di, dj, normal):
    ci = np.asarray(ci)
    n = len(ci)
    block = np.zeros((n, 8))
    block[:, 0] = ci
    block[:, 1] = cj
    block[:, 2] = area
    block[:, 3] = di
    block[:, 4] = dj
    block[:, 5] = normal[0]
    block[:, 6] = normal[1]
    block[:, 7] = -1
    return block


def _fracture_junctions(cells, nodes, half, apertures, centers):
    """Connect fracture cells sharing a grid node.

    Two cells meeting at a node get an ordinary connection.  Three or more
    form a star whose center unknown is eliminated; each branch pair gets a
    connection tagged with the star id.
    """
    if not len(cells):
        return np.zeros((0, 8)), 0
    node_of = nodes.ravel()
    cell_of = np.repeat(cells, 2)
    dist_of = np.repeat(half, 2)
    ap_of = np.repeat(apertures, 2)
    order = np.argsort(node_of, kind='stable')
    node_of, cell_of = node_of[order], cell_of[order]
    dist_of, ap_of = dist_of[order], ap_of[order]
    starts = np.concatenate([[0], np.nonzero(np.diff(node_of))[0] + 1, [len(node_of)]])
    rows = []
    nstars = 0
    for k in range(len(starts) - 1):
        lo, hi = starts[k], starts[k + 1]
        if hi - lo < 2:
            continue
        star = -1
        if hi - lo > 2:
            star = nstars
            nstars += 1
        for a in range(lo, hi):
            for b in range(a + 1, hi):
                ci, cj = cell_of[a], cell_of[b]
                vec = centers[cj] - centers[ci]
                vec = vec / np.hypot(*vec)
                rows.append((ci, cj, min(ap_of[a], ap_of[b]), dist_of[a], dist_of[b],
                             vec[0], vec[1], star))
    if not rows:
        return np.zeros((0, 8)), 0
    return np.array(rows, dtype=float), nstars


def distance_to_fracture(grid):
    """Distance from each cell center to the nearest fracture segment.

    :param grid:
      FineGrid with at least one fracture cell.
    :returns:
      Per-cell distance in m; fracture cells get 0.
    :raises:
      GridException when the grid has no fractures.
    """
    frac = grid.fractureCells()
    if not len(frac):
        raise GridException('Distance to fracture is undefined on a grid without fractures.')
    matrix = grid.matrixCells()
    distance = np.zeros(grid.cell_count)
    if not len(matrix):
        return distance
    if grid.fracture_segments is not None:
        tree = shapely.STRtree(shapely.linestrings(grid.fracture_segments))
        (inputs, _), dist = tree.query_nearest(shapely.points(grid.center[matrix]),
                                               return_distance=True, all_matches=False)
        distance[matrix[inputs]] = dist
    else:
        logging.warning('Grid has no fracture segment geometry; '
                        'measuring distance to fracture cell centers.')
        dist, _ = cKDTree(grid.center[frac]).query(grid.center[matrix])
        distance[matrix] = dist
    return distance


def locate_cells(grid, points, target='any'):
    """Snap point locations to the nearest cell center(s).

    A point equidistant from several cell centers (e.g. a grid node or a
    fracture intersection) returns all of them, so callers can share a
    well's rate between them.

    :param grid:
      FineGrid.
    :param points:
      Array-like (k, 2) of locations in m.
    :param target:
      'any', 'matrix' or 'fracture' to restrict candidate cells.
    :returns:
      List of k sorted integer arrays of cell indices.
    """
    if target == 'any':
        candidates = np.arange(grid.cell_count)
    elif target == 'matrix':
        candidates = grid.matrixCells()
    elif target == 'fracture':
        candidates = grid.fractureCells()
    else:
        raise GridException('Unknown location target "%s".' % target)
    if not len(candidates):
        raise GridException('Grid has no %s cells to place a well in.' % target)
    tree = cKDTree(grid.center[candidates])
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dist, _ = tree.query(points)
    located = []
    for point, d in zip(points, dist):
        ties = tree.query_ball_point(point, d * (1 + 1e-9) + 1e-12)
        located.append(np.sort(candidates[np.asarray(ties, dtype=np.int64)]))
    return located
