"""Min/max acceleration grid: per-region value ranges and opacity majorants.

The volume is split into N^3-voxel cells, each recording the min and
max lattice value inside its extent (dilated by one voxel so trilinear
interpolation cannot escape the range). Against a transfer function the
range yields a per-cell opacity majorant: cells with majorant zero are
skippable, everything else bounds the delta-tracking and adaptive-step
math.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPACITY_BINS = 256


def layout(dims, cell_size: int):
    """Grid dims, cell count, and byte footprint (8 bytes/cell) without allocating."""
    grid = tuple(-(-int(v) // int(cell_size)) for v in dims)
    cells = grid[0] * grid[1] * grid[2]
    return grid, cells, cells * 8


@dataclass
class MacroCellGrid:
    cell_size: int
    dims: tuple[int, int, int]
    grid_dims: tuple[int, int, int]
    value_min: np.ndarray  # (gz, gy, gx) f32
    value_max: np.ndarray
    majorant: np.ndarray  # refreshed by update_majorants

    def cell_of(self, native_pos: np.ndarray) -> np.ndarray:
        """Containing cell index (N,3 as x,y,z) for native voxel coordinates."""
        idx = np.floor(np.asarray(native_pos, dtype=np.float64) / self.cell_size).astype(np.int64)
        return np.clip(idx, 0, np.asarray(self.grid_dims, dtype=np.int64) - 1)

    def majorant_at(self, cells: np.ndarray) -> np.ndarray:
        return self.majorant[cells[:, 2], cells[:, 1], cells[:, 0]]

    def range_at(self, cells: np.ndarray):
        z, y, x = cells[:, 2], cells[:, 1], cells[:, 0]
        return self.value_min[z, y, x], self.value_max[z, y, x]


def build(field_src, dims=None, cell_size: int = 16) -> MacroCellGrid:
    """Scan the field's lattice and record dilated per-cell value ranges.

    The grid is built from lattice samples post hoc; ranges are expanded
    by the one-voxel border a trilinear query can reach.
    """
    if cell_size < 2:
        raise ValueError("cell_size must be >= 2")
    dims = tuple(dims) if dims is not None else field_src.domain.dims
    grid, _, _ = layout(dims, cell_size)
    lattice = field_src.sample_lattice(dims)
    gx, gy, gz = grid
    vmin = np.empty((gz, gy, gx), dtype=np.float32)
    vmax = np.empty((gz, gy, gx), dtype=np.float32)
    vx, vy, vz = dims
    n = cell_size
    for ck in range(gz):
        z0, z1 = max(ck * n - 1, 0), min((ck + 1) * n + 1, vz)
        for cj in range(gy):
            y0, y1 = max(cj * n - 1, 0), min((cj + 1) * n + 1, vy)
            for ci in range(gx):
                x0, x1 = max(ci * n - 1, 0), min((ci + 1) * n + 1, vx)
                block = lattice[z0:z1, y0:y1, x0:x1]
                vmin[ck, cj, ci] = block.min()
                vmax[ck, cj, ci] = block.max()
    return MacroCellGrid(n, dims, grid, vmin, vmax, np.ones((gz, gy, gx), dtype=np.float32))


class _RangeMax:
    """Sparse table over binned opacity maxima for O(1) range-max queries."""

    def __init__(self, bin_max: np.ndarray):
        n = bin_max.shape[0]
        levels = max(1, n.bit_length())
        table = [np.asarray(bin_max, dtype=np.float64)]
        for k in range(1, levels):
            prev = table[-1]
            half = 1 << (k - 1)
            if prev.shape[0] <= half:
                break
            table.append(np.maximum(prev[:-half], prev[half:]))
        self.table = table

    def query(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Max over inclusive bin range [lo, hi] per element."""
        width = np.maximum(hi - lo + 1, 1)
        k = np.minimum(np.floor(np.log2(width)).astype(np.int64), len(self.table) - 1)
        out = np.empty(lo.shape, dtype=np.float64)
        for level in np.unique(k):
            sel = k == level
            span = 1 << int(level)
            t = self.table[int(level)]
            out[sel] = np.maximum(t[lo[sel]], t[hi[sel] - span + 1])
        return out


def opacity_bin_maxima(tf, bins: int = OPACITY_BINS) -> np.ndarray:
    """Upper bound of tf opacity on each value bin [b/bins, (b+1)/bins)."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    xs = np.unique(np.concatenate([edges, tf.points[:, 0]]))
    alphas = tf.eval(xs)[:, 3]
    bin_of = np.minimum((xs * bins).astype(np.int64), bins - 1)
    bin_max = np.zeros(bins, dtype=np.float64)
    np.maximum.at(bin_max, bin_of, alphas)
    # an edge value bounds both bins it touches
    on_edge = np.isclose(xs * bins, np.round(xs * bins)) & (xs > 0)
    left_bin = np.clip((np.round(xs * bins)).astype(np.int64) - 1, 0, bins - 1)
    np.maximum.at(bin_max, left_bin[on_edge], alphas[on_edge])
    return bin_max


def update_majorants(grid: MacroCellGrid, tf) -> MacroCellGrid:
    """Refresh per-cell opacity majorants for a new transfer function."""
    bin_max = opacity_bin_maxima(tf)
    rmq = _RangeMax(bin_max)
    lo = np.clip((grid.value_min.ravel() * OPACITY_BINS).astype(np.int64), 0, OPACITY_BINS - 1)
    hi = np.clip((grid.value_max.ravel() * OPACITY_BINS).astype(np.int64), 0, OPACITY_BINS - 1)
    mu = rmq.query(lo, hi)
    grid.majorant = mu.reshape(grid.value_min.shape).astype(np.float32)
    return grid


def traverse(grid: MacroCellGrid, origin, direction, t0: float, t1: float):
    """Walk one ray through the cell grid (3D DDA), world coordinates in [0,1]^3.

    Yields (cell_index (3,), t_enter, t_exit) with contiguous intervals
    covering [t0, t1] exactly.
    """
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    gdims = np.asarray(grid.grid_dims, dtype=np.int64)
    cell_w = np.asarray(
        [grid.cell_size / grid.dims[0], grid.cell_size / grid.dims[1], grid.cell_size / grid.dims[2]]
    )
    eps = 1e-12
    t = t0
    out = []
    p = o + d * (t0 + 1e-9)
    cell = np.clip(np.floor(p / cell_w).astype(np.int64), 0, gdims - 1)
    step = np.where(d > 0, 1, -1)
    while t < t1 - eps:
        boundary = (cell + (d > 0)) * cell_w
        with np.errstate(divide="ignore", invalid="ignore"):
            t_cross = np.where(np.abs(d) > eps, (boundary - o) / d, np.inf)
        axis = int(np.argmin(t_cross))
        t_next = min(float(t_cross[axis]), t1)
        t_next = max(t_next, t)
        out.append((tuple(int(c) for c in cell), t, t_next))
        if t_next >= t1 - eps:
            break
        cell = cell.copy()
        cell[axis] += step[axis]
        if cell[axis] < 0 or cell[axis] >= gdims[axis]:
            break
        t = t_next
    if out and out[-1][2] < t1:
        cell_i, te, _ = out[-1]
        out[-1] = (cell_i, te, t1)
    return out
