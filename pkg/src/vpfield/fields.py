"""Field containers on a PhaseGrid and elementary field algebra.

Five layouts, all row-major in the shared (x_1..x_d, v_1..v_d) index order:

* WaveField                 complex alpha on the full phase grid
* RealField                 real scalar on the phase grid (f = |alpha|^2, m_k)
* SpatialField              scalar on the x-grid (rho is real, K is complex)
* SpatialVectorField        real d-vector on the x-grid (the force F)
* SpatialComplexVectorField complex d-vector on the x-grid (phase density phi)

Operations are plain functions over these containers.  Quadrature is the
Riemann sum with the cell volume as weight; reductions go through numpy's
pairwise summation so repeated evaluation is bit-identical and independent
of the worker count.  Interpolation is multilinear with the compact-support
convention: out-of-box values count as zero.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, NonFiniteField
from .grid import PhaseGrid

# Fractional offsets this close to a node collapse onto it, so querying a
# field at (floating-point) node coordinates returns the stored value.
_SNAP = 1e-12


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------

@dataclass
class WaveField:
    """Complex wave density alpha sampled on the phase grid."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            raise GridMismatch(
                f"WaveField values shape {self.values.shape} != grid shape {self.grid.shape}")

    def copy(self):
        return WaveField(self.grid, self.values.copy())


@dataclass
class RealField:
    """Real scalar on the phase grid."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise GridMismatch(
                f"RealField values shape {self.values.shape} != grid shape {self.grid.shape}")

    def copy(self):
        return RealField(self.grid, self.values.copy())


@dataclass
class SpatialField:
    """Scalar on the x-grid; dtype is float64 for rho, complex128 for K."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values)
        if self.values.shape != self.grid.xshape:
            raise GridMismatch(
                f"SpatialField values shape {self.values.shape} != x-grid shape {self.grid.xshape}")

    def copy(self):
        return SpatialField(self.grid, self.values.copy())


@dataclass
class SpatialVectorField:
    """Real d-vector on the x-grid, component axis first: shape (d,) + xshape."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        want = (self.grid.d,) + self.grid.xshape
        if self.values.shape != want:
            raise GridMismatch(
                f"SpatialVectorField values shape {self.values.shape} != {want}")

    def copy(self):
        return SpatialVectorField(self.grid, self.values.copy())


@dataclass
class SpatialComplexVectorField:
    """Complex d-vector on the x-grid, component axis first."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.complex128)
        want = (self.grid.d,) + self.grid.xshape
        if self.values.shape != want:
            raise GridMismatch(
                f"SpatialComplexVectorField values shape {self.values.shape} != {want}")

    def copy(self):
        return SpatialComplexVectorField(self.grid, self.values.copy())


# ---------------------------------------------------------------------------
# checks and weights
# ---------------------------------------------------------------------------

def assert_finite(field, context=""):
    """Raise NonFiniteField when a field contains NaN/Inf."""
    if not np.all(np.isfinite(field.values)):
        raise NonFiniteField(f"non-finite values{' in ' + context if context else ''}")
    return field


def quad_weight(field):
    """Riemann-sum cell weight appropriate to the field's layout."""
    if isinstance(field, (WaveField, RealField)):
        return field.grid.cell_volume
    return field.grid.x_cell_volume


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def modulus_squared(alpha: WaveField) -> RealField:
    """f = |alpha|^2, pointwise nonnegative by construction."""
    v = alpha.values
    return RealField(alpha.grid, v.real * v.real + v.imag * v.imag)


def axpy(a, x, y):
    """a*x + y on matching grids, returning a new field of x's type."""
    if not x.grid.same_layout(y.grid):
        raise GridMismatch("axpy operands live on different grids")
    return type(x)(x.grid, a * x.values + y.values)


def scale(c, x):
    return type(x)(x.grid, c * x.values)


def inner(x, y):
    """L2 inner product <x, y> = sum x * conj(y) * cell weight."""
    if not x.grid.same_layout(y.grid):
        raise GridMismatch("inner operands live on different grids")
    return complex(np.sum(x.values * np.conj(y.values))) * quad_weight(x)


def lp_norm(field, p):
    """L^p quadrature norm; p may be any real >= 1 or numpy.inf.

    Uses the cell-volume weight of the field's layout and numpy's pairwise
    summation (deterministic, schedule-independent).
    """
    mag = np.abs(field.values)
    if np.isinf(p):
        return float(mag.max()) if mag.size else 0.0
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    w = quad_weight(field)
    if p == 1:
        return float(np.sum(mag) * w)
    if p == 2:
        return float(np.sqrt(np.sum(mag * mag) * w))
    return float((np.sum(mag ** p) * w) ** (1.0 / p))


def vector_magnitude(field):
    """Pointwise Euclidean magnitude of a vector field (component axis 0)."""
    v = field.values
    return np.sqrt(np.sum(v.real * v.real + v.imag * v.imag, axis=0))


# ---------------------------------------------------------------------------
# multilinear interpolation
# ---------------------------------------------------------------------------

try:  # optional compiled fast path; arithmetic mirrors the numpy reference
    from numba import njit as _njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


if _HAVE_NUMBA:
    @_njit(cache=True, nogil=True)
    def _multilinear_kernel(flat, shape, lows, spacings, points, out):
        m, ndim = points.shape
        ncorner = 1 << ndim
        for i in range(m):
            base = np.empty(ndim, dtype=np.int64)
            frac = np.empty(ndim)
            for a in range(ndim):
                u = (points[i, a] - lows[a]) / spacings[a] - 0.5
                i0 = np.floor(u)
                t = u - i0
                if t > 1.0 - 1e-12:
                    i0 = i0 + 1.0
                    t = 0.0
                if t < 1e-12:
                    t = 0.0
                base[a] = np.int64(i0)
                frac[a] = t
            acc = complex(0.0, 0.0)
            for corner in range(ncorner):
                w = 1.0
                idx = np.int64(0)
                valid = True
                for a in range(ndim):
                    bit = (corner >> a) & 1
                    ia = base[a] + bit
                    wa = frac[a] if bit else 1.0 - frac[a]
                    w = w * wa
                    if ia < 0 or ia >= shape[a]:
                        valid = False
                        ic = 0 if ia < 0 else shape[a] - 1
                    else:
                        ic = ia
                    idx = idx * shape[a] + ic
                if valid:
                    acc += w * flat[idx]
            out[i] = acc
        return out


def multilinear(values, lows, spacings, points, out=None):
    """Multilinear interpolation of a node-centered array at arbitrary points.

    Parameters
    ----------
    values : ndarray, any dimension, node-centered samples
    lows, spacings : per-axis box origin and spacing
    points : (m, ndim) coordinates
    out : optional preallocated (m,) output of values.dtype

    Out-of-box corners contribute zero (compact-support convention), so a
    point outside the box returns exactly 0 and a point in the outermost
    half-cell fades linearly to 0.  The result never exceeds the maximum
    modulus of the 2^ndim surrounding nodes (convex weights).
    """
    ndim = values.ndim
    shape = values.shape
    points = np.asarray(points, dtype=np.float64)
    m = points.shape[0]

    if _HAVE_NUMBA and m > 512:
        flat = np.ascontiguousarray(values, dtype=np.complex128).reshape(-1)
        buf = np.empty(m, dtype=np.complex128)
        _multilinear_kernel(flat, np.asarray(shape, dtype=np.int64),
                            np.asarray(lows, dtype=np.float64),
                            np.asarray(spacings, dtype=np.float64),
                            np.ascontiguousarray(points), buf)
        result = buf if values.dtype.kind == "c" else buf.real
        if out is None:
            return result.astype(values.dtype, copy=False)
        out[:] = result
        return out

    if out is None:
        out = np.zeros(m, dtype=values.dtype)
    else:
        out[:] = 0

    base_idx = []
    fracs = []
    for a in range(ndim):
        u = (points[:, a] - lows[a]) / spacings[a] - 0.5
        i0 = np.floor(u)
        t = u - i0
        high = t > 1.0 - _SNAP
        if high.any():
            i0 = i0 + high
            t = np.where(high, 0.0, t)
        t[t < _SNAP] = 0.0
        base_idx.append(i0.astype(np.int64))
        fracs.append(t)

    flat = values.reshape(-1)
    for corner in range(1 << ndim):
        w = None
        idx = None
        valid = None
        for a in range(ndim):
            bit = (corner >> a) & 1
            ia = base_idx[a] + bit
            wa = fracs[a] if bit else 1.0 - fracs[a]
            w = wa if w is None else w * wa
            ok = (ia >= 0) & (ia < shape[a])
            valid = ok if valid is None else (valid & ok)
            ic = np.clip(ia, 0, shape[a] - 1)
            idx = ic if idx is None else idx * shape[a] + ic
        gathered = flat[idx]
        if values.dtype.kind == "c":
            out += np.where(valid, w, 0.0) * gathered
        else:
            out += np.where(valid, w, 0.0) * gathered
    return out


def interpolate(field, points):
    """Evaluate a phase-grid field at phase-space coordinates.

    ``points`` is a single length-2d coordinate or an (m, 2d) batch; returns
    a scalar or an (m,) array.  Points outside the box return 0.
    """
    g = field.grid
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != 2 * g.d:
        raise GridMismatch(f"expected {2 * g.d} coordinates, got {pts.shape[1]}")
    res = multilinear(field.values, g.lows, g.spacings, pts)
    if np.isscalar(points) or np.asarray(points).ndim == 1:
        return res[0]
    return res


def interpolate_spatial(grid, values, points):
    """Evaluate an x-grid array (scalar, any dtype) at (m, d) positions."""
    return multilinear(values, grid.x_lo, grid.dx, np.atleast_2d(points))


# ---------------------------------------------------------------------------
# centered differences
# ---------------------------------------------------------------------------

def centered_difference(values, axis, h):
    """(f(z+h) - f(z-h)) / (2h) with zero extension beyond the box.

    The zero extension keeps exact summation-by-parts, sum_j a_j (Db)_j =
    -sum_j (Da)_j b_j, which several cancellation identities rely on.  At
    the faces this is first-order for non-vanishing data; fields here decay
    toward the faces by construction.
    """
    out = np.zeros_like(values)
    n = values.shape[axis]
    plus = [slice(None)] * values.ndim
    minus = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    # interior plus faces in one shifted-slice pair per side
    dst_hi = list(dst)
    dst_hi[axis] = slice(0, n - 1)
    plus[axis] = slice(1, n)
    out[tuple(dst_hi)] += values[tuple(plus)]
    dst_lo = list(dst)
    dst_lo[axis] = slice(1, n)
    minus[axis] = slice(0, n - 1)
    out[tuple(dst_lo)] -= values[tuple(minus)]
    out *= 1.0 / (2.0 * h)
    return out


def centered_gradient(values, spacings):
    """All-axis centered gradient; returns a list of arrays."""
    return [centered_difference(values, a, h) for a, h in enumerate(spacings)]
