"""Weighted local-supremum norms and the ball constant.

The A(kappa, p) norm of a function on R^n is

    sup_{R >= 0} (1+R)^(-kappa/p) * ( integral of sup_{|zbar| <= R} |f(z+zbar)|^p dz )^(1/p)

and the order-1 B norm adds the first partials in quadrature.  On a grid
the inner sup becomes a morphological dilation of |f| by the discrete
Euclidean ball of radius R (exact brute force over the offset stencil,
complexity O(N * |stencil|)); the outer sup runs over a finite radius set,
by default {0} plus geometrically spaced multiples of the cell diagonal up
to half the box diagonal.  Since any finite set under-samples sup_{R>=0},
the report records the attaining radius so callers can refine.

The machinery is dimension-generic: it operates on raw (values, spacings)
pairs so the property battery can run in 1-D/2-D while the solver uses the
full phase grid.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_BALL_EPS = 1e-9  # relative slack when testing |offset| <= R on the lattice


def unit_ball_volume(b):
    """Lebesgue volume of the unit ball in dimension b (real b > 0)."""
    if b <= 0:
        raise DomainError(f"ball dimension must be positive, got {b}")
    return math.pi ** (b / 2.0) / math.gamma(b / 2.0 + 1.0)


def unit_sphere_area(d):
    """Surface measure of the unit sphere S^(d-1)."""
    return d * unit_ball_volume(d)


@dataclass(frozen=True)
class BallConstant:
    """inf_{R>0} (1+R)^a / (omega_b R^b) together with its inputs."""

    a: float
    b: float
    value: float


def ball_constant(a, b) -> BallConstant:
    """Closed form a^a (a-b)^(b-a) / (omega_b b^b); a = b uses the limit 0^0 = 1."""
    if b <= 0 or a < b:
        raise DomainError(f"need a >= b > 0, got a={a}, b={b}")
    omega = unit_ball_volume(b)
    if a == b:
        value = 1.0 / omega
    else:
        value = a ** a * (a - b) ** (b - a) / (omega * b ** b)
    return BallConstant(float(a), float(b), float(value))


def ball_constant_numeric(a, b, n=2001, lo=1e-3, hi=1e3, refine=4):
    """Oracle: direct minimization of (1+R)^a/(omega_b R^b).

    Coarse log-spaced scan followed by local zoom rounds, all independent
    of the closed form.  For a = b the infimum sits at R -> infinity and is
    only approached to O(1/hi); callers compare with a matching tolerance.
    """
    if b <= 0 or a < b:
        raise DomainError(f"need a >= b > 0, got a={a}, b={b}")
    omega = unit_ball_volume(b)

    def objective(R):
        return (1.0 + R) ** a / (omega * R ** b)

    R = np.logspace(math.log10(lo), math.log10(hi), n)
    vals = objective(R)
    i = int(np.argmin(vals))
    best_r = R[i]
    step_lo = R[max(i - 1, 0)]
    step_hi = R[min(i + 1, n - 1)]
    for _ in range(refine):
        R = np.linspace(step_lo, step_hi, 201)
        vals = objective(R)
        i = int(np.argmin(vals))
        best_r = R[i]
        step_lo = R[max(i - 1, 0)]
        step_hi = R[min(i + 1, 200)]
    return float(objective(best_r)), float(best_r)


def ball_minimizer(a, b):
    """Stationary radius R* = b/(a-b) of the ball-constant objective (a > b)."""
    if a <= b:
        raise DomainError(f"minimizer requires a > b, got a={a}, b={b}")
    return b / (a - b)


# ---------------------------------------------------------------------------
# discrete ball dilation
# ---------------------------------------------------------------------------

def ball_offsets(spacings, R, shape=None):
    """Integer node offsets o with |o * spacings|_2 <= R, excluding the origin.

    Enumerates axis by axis with pruning on the partial sum of squares, so
    the cost tracks the stencil size rather than the bounding box.  When
    ``shape`` is given, per-axis offsets are clipped to the grid extent.
    """
    spacings = [float(h) for h in spacings]
    ndim = len(spacings)
    r2 = R * R * (1.0 + _BALL_EPS) + 1e-300
    partial = np.zeros((1, 0), dtype=np.int64)
    sumsq = np.zeros(1)
    for a in range(ndim):
        h = spacings[a]
        reach = int(math.floor(math.sqrt(max(r2, 0.0)) / h))
        if shape is not None:
            reach = min(reach, shape[a] - 1)
        cand = np.arange(-reach, reach + 1, dtype=np.int64)
        trial = sumsq[:, None] + (cand[None, :] * h) ** 2
        keep_rows, keep_cols = np.nonzero(trial <= r2)
        partial = np.concatenate(
            [partial[keep_rows], cand[keep_cols, None]], axis=1)
        sumsq = trial[keep_rows, keep_cols]
    nonzero = np.any(partial != 0, axis=1)
    return partial[nonzero]


def local_sup(values, spacings, R, offsets=None):
    """Dilation of a nonnegative array by the Euclidean ball of radius R.

    Out-of-box values are treated as 0, which is a no-op for the nonnegative
    inputs this operates on (|f| in the norm pipeline); R = 0 returns a copy.
    """
    values = np.asarray(values)
    if np.any(values < 0):
        raise DomainError("local_sup expects a nonnegative array")
    out = values.copy()
    if R == 0:
        return out
    if offsets is None:
        offsets = ball_offsets(spacings, R, values.shape)
    shape = values.shape
    for off in offsets:
        dst = []
        src = []
        for a, o in enumerate(off):
            o = int(o)
            start = max(0, -o)
            stop = min(shape[a], shape[a] - o)
            if stop <= start:
                dst = None
                break
            dst.append(slice(start, stop))
            src.append(slice(start + o, stop + o))
        if dst is None:
            continue
        dst = tuple(dst)
        view = out[dst]
        np.maximum(view, values[tuple(src)], out=view)
    return out


# ---------------------------------------------------------------------------
# radius sets and the norms
# ---------------------------------------------------------------------------

def default_radius_set(spacings, shape):
    """{0} plus cell-diagonal multiples 2^(j/2) up to half the box diagonal."""
    cell = math.sqrt(sum(h * h for h in spacings))
    half_box = 0.5 * math.sqrt(sum((n * h) ** 2 for n, h in zip(shape, spacings)))
    radii = [0.0]
    j = 0
    while True:
        r = cell * 2.0 ** (j / 2.0)
        if r > half_box:
            break
        radii.append(r)
        j += 1
    return tuple(radii)


@dataclass
class NormReport:
    """A/B norm evaluation record, JSON-serializable via __dict__-like dump."""

    a_norm: float
    argmax_radius: float
    radius_set: tuple
    kappa: float
    p: float
    b_norm: float = None
    per_derivative: tuple = ()

    def to_dict(self):
        return {
            "a_norm": self.a_norm,
            "b_norm": self.b_norm,
            "per_derivative_a_norms": list(self.per_derivative),
            "argmax_radius": self.argmax_radius,
            "radius_set": list(self.radius_set),
            "kappa": self.kappa,
            "p": self.p,
        }


def _magnitude(values):
    values = np.asarray(values)
    if values.dtype.kind == "c":
        return np.abs(values)
    return np.abs(values)


def a_norm_values(values, spacings, kappa, p, radius_set):
    """Core A-norm: returns (value, argmax_radius, per-radius profile)."""
    values = np.asarray(values)
    ndim = values.ndim
    if kappa < ndim:
        raise DomainError(f"kappa must be >= dimension {ndim}, got {kappa}")
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if 0.0 not in radius_set:
        raise DomainError("radius set must include 0")
    mag = _magnitude(values)
    w = float(np.prod(np.asarray(spacings, dtype=np.float64)))
    best = -math.inf
    best_r = 0.0
    profile = []
    for R in sorted(set(float(r) for r in radius_set)):
        dil = local_sup(mag, spacings, R)
        integral = float(np.sum(dil ** p) * w)
        val = (1.0 + R) ** (-kappa / p) * integral ** (1.0 / p)
        profile.append((R, val))
        if val > best:
            best = val
            best_r = R
    return best, best_r, profile


def a_norm_magnitude_values(component_list, spacings, kappa, p, radius_set):
    """A-norm of a vector quantity via its pointwise Euclidean magnitude."""
    sq = None
    for comp in component_list:
        comp = np.asarray(comp)
        m2 = comp.real * comp.real + comp.imag * comp.imag \
            if comp.dtype.kind == "c" else comp * comp
        sq = m2 if sq is None else sq + m2
    return a_norm_values(np.sqrt(sq), spacings, kappa, p, radius_set)


def a_norm(field, kappa, p=2.0, radius_set=None) -> NormReport:
    """A(kappa, p) norm of a phase-grid field (modulus for complex input)."""
    g = field.grid
    if radius_set is None:
        radius_set = default_radius_set(g.spacings, g.shape)
    value, arg_r, _ = a_norm_values(field.values, g.spacings, kappa, p, radius_set)
    return NormReport(a_norm=value, argmax_radius=arg_r,
                      radius_set=tuple(radius_set), kappa=kappa, p=p)


def b_norm(field, gradient_fields, kappa, p=2.0, radius_set=None) -> NormReport:
    """Order-1 B norm: (sum over |beta| <= 1 of A-norm(d^beta f)^p)^(1/p).

    ``gradient_fields`` are the 2d partial-derivative fields of ``field``
    (one per axis, e.g. from chartuple.gradient with which="all").
    """
    g = field.grid
    if radius_set is None:
        radius_set = default_radius_set(g.spacings, g.shape)
    base = a_norm(field, kappa, p, radius_set)
    per = [base.a_norm]
    for gf in gradient_fields:
        per.append(a_norm(gf, kappa, p, radius_set).a_norm)
    total = float(np.sum(np.asarray(per) ** p) ** (1.0 / p))
    return NormReport(a_norm=base.a_norm, argmax_radius=base.argmax_radius,
                      radius_set=tuple(radius_set), kappa=kappa, p=p,
                      b_norm=total, per_derivative=tuple(per[1:]))
