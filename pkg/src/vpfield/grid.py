"""Uniform tensor-product phase-space grids.

A grid covers the box [x_lo, x_hi] x [v_lo, v_hi] in R^d x R^d with
node-centered sampling: node i along an axis sits at lo + (i + 1/2) h.
The index order is row-major with position axes first, velocity axes
second: (x_1, ..., x_d, v_1, ..., v_d).  Every module in the package
shares this layout.

Fields are assumed negligible near the box faces (the whole-space problem
is truncated to a compact box); interpolation and differencing treat
out-of-box values as zero accordingly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadExtent, BudgetExceeded

DEFAULT_NODE_BUDGET = 1 << 25  # ~33.5M phase-space nodes

MIN_POINTS = 4


def _astuple(value, d, name):
    """Broadcast a scalar or length-d sequence to a d-tuple of floats."""
    if np.isscalar(value):
        return (float(value),) * d
    out = tuple(float(v) for v in value)
    if len(out) != d:
        raise BadExtent(f"{name} must be a scalar or length-{d} sequence, got {value!r}")
    return out


def _int_tuple(value, d, name):
    if np.isscalar(value):
        return (int(value),) * d
    out = tuple(int(v) for v in value)
    if len(out) != d:
        raise BadExtent(f"{name} must be a scalar or length-{d} sequence, got {value!r}")
    return out


@dataclass(frozen=True)
class GridConfig:
    """Construction parameters for a PhaseGrid."""

    d: int = 3
    nx: tuple = (8, 8, 8)
    nv: tuple = (8, 8, 8)
    x_lo: tuple = (-4.0, -4.0, -4.0)
    x_hi: tuple = (4.0, 4.0, 4.0)
    v_lo: tuple = (-4.0, -4.0, -4.0)
    v_hi: tuple = (4.0, 4.0, 4.0)
    budget: int = DEFAULT_NODE_BUDGET


@dataclass(frozen=True)
class PhaseGrid:
    """Node-centered uniform grid on the phase-space box.

    dx/dv are derived from the bounds; num_nodes is checked against the
    budget at construction.  Instances are immutable and hashable, which
    lets kernel tables and FFT plans be cached per grid.
    """

    d: int
    nx: tuple
    nv: tuple
    x_lo: tuple
    x_hi: tuple
    v_lo: tuple
    v_hi: tuple
    dx: tuple = field(init=False)
    dv: tuple = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise BadExtent(f"dimension must be >= 1, got {self.d}")
        for name, n in (("nx", self.nx), ("nv", self.nv)):
            for v in n:
                if v < MIN_POINTS:
                    raise BadExtent(f"{name} entries must be >= {MIN_POINTS}, got {n}")
        for name, lo, hi in (("x", self.x_lo, self.x_hi), ("v", self.v_lo, self.v_hi)):
            for a, b in zip(lo, hi):
                if not (a < b):
                    raise BadExtent(f"{name} bounds must satisfy lo < hi, got [{a}, {b}]")
                if not (math.isfinite(a) and math.isfinite(b)):
                    raise BadExtent(f"{name} bounds must be finite, got [{a}, {b}]")
        object.__setattr__(
            self, "dx",
            tuple((b - a) / n for a, b, n in zip(self.x_lo, self.x_hi, self.nx)))
        object.__setattr__(
            self, "dv",
            tuple((b - a) / n for a, b, n in zip(self.v_lo, self.v_hi, self.nv)))

    # -- shapes ---------------------------------------------------------

    @property
    def shape(self):
        """Phase-space array shape, x axes first."""
        return self.nx + self.nv

    @property
    def xshape(self):
        return self.nx

    @property
    def vshape(self):
        return self.nv

    @property
    def num_nodes(self):
        return int(np.prod(self.shape, dtype=np.int64))

    @property
    def num_xnodes(self):
        return int(np.prod(self.nx, dtype=np.int64))

    # -- measures ---------------------------------------------------------

    @property
    def x_cell_volume(self):
        return float(np.prod(self.dx))

    @property
    def v_cell_volume(self):
        return float(np.prod(self.dv))

    @property
    def cell_volume(self):
        """Phase-space quadrature weight per node."""
        return self.x_cell_volume * self.v_cell_volume

    @property
    def spacings(self):
        """All 2d spacings in index order."""
        return self.dx + self.dv

    @property
    def lows(self):
        return self.x_lo + self.v_lo

    @property
    def cell_diagonal(self):
        return math.sqrt(sum(h * h for h in self.spacings))

    @property
    def box_diagonal(self):
        spans = [b - a for a, b in zip(self.x_lo, self.x_hi)]
        spans += [b - a for a, b in zip(self.v_lo, self.v_hi)]
        return math.sqrt(sum(s * s for s in spans))

    # -- coordinates ------------------------------------------------------

    def x_axis(self, i):
        """Node coordinates along position axis i."""
        return self.x_lo[i] + (np.arange(self.nx[i]) + 0.5) * self.dx[i]

    def v_axis(self, i):
        return self.v_lo[i] + (np.arange(self.nv[i]) + 0.5) * self.dv[i]

    def axes(self):
        """All 2d node-coordinate arrays in index order."""
        return [self.x_axis(i) for i in range(self.d)] + \
               [self.v_axis(i) for i in range(self.d)]

    def phase_mesh(self):
        """Sparse (broadcastable) coordinate mesh over the full phase grid."""
        return np.meshgrid(*self.axes(), indexing="ij", sparse=True)

    def x_mesh(self):
        """Sparse coordinate mesh over the position grid only."""
        return np.meshgrid(*[self.x_axis(i) for i in range(self.d)],
                           indexing="ij", sparse=True)

    def node_coordinates(self, flat_indices):
        """Coordinates of nodes given flat indices; returns (m, 2d) array."""
        idx = np.unravel_index(np.asarray(flat_indices), self.shape)
        cols = [self.lows[a] + (idx[a] + 0.5) * self.spacings[a]
                for a in range(2 * self.d)]
        return np.stack(cols, axis=-1)

    def x_key(self):
        """Hashable description of the position grid (for kernel caches)."""
        return (self.d, self.nx, self.x_lo, self.x_hi)

    def same_layout(self, other):
        return (self.d == other.d and self.nx == other.nx and self.nv == other.nv
                and self.x_lo == other.x_lo and self.x_hi == other.x_hi
                and self.v_lo == other.v_lo and self.v_hi == other.v_hi)


def make_grid(config: GridConfig) -> PhaseGrid:
    """Build and validate a PhaseGrid from a GridConfig.

    Raises BadExtent for disordered bounds or too-few points and
    BudgetExceeded when nx*nv overflows the configured node budget.
    """
    d = config.d
    nx = _int_tuple(config.nx, d, "nx")
    nv = _int_tuple(config.nv, d, "nv")
    x_lo = _astuple(config.x_lo, d, "x_lo")
    x_hi = _astuple(config.x_hi, d, "x_hi")
    v_lo = _astuple(config.v_lo, d, "v_lo")
    v_hi = _astuple(config.v_hi, d, "v_hi")
    # Guard the product before allocating anything: counts like 4096^6
    # overflow naive expectations long before numpy would complain.
    total = 1
    for n in nx + nv:
        if n <= 0:
            raise BadExtent(f"point counts must be positive, got {n}")
        total *= n
        if total > config.budget:
            raise BudgetExceeded(
                f"grid would hold >= {total} nodes, budget is {config.budget}")
    return PhaseGrid(d=d, nx=nx, nv=nv, x_lo=x_lo, x_hi=x_hi, v_lo=v_lo, v_hi=v_hi)
