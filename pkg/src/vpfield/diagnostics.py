"""Runtime monitors: moments, energies, symplectic form, globality, gauge.

Velocity moments:  m_k(x) = integral |v|^k |alpha|^2 dv,  M_k = integral m_k dx.
The moment interpolation estimate bounds ||m_l||_r by a product of
||alpha||_{2p} and M_k powers with an explicit closed-form constant; it is
checked here exactly as stated, degenerate exponents included (0^0 = 1).

Energies: H is the classical functional written so that it is conserved by
the attractive-convention dynamics used throughout the package,

    H = integral |v|^2/2 f dz + 1/2 integral rho (Gamma * rho) dx,

(the interaction term is negative for the attractive branch), and the field
functional

    H_vl = 1/2 Im integral conj(alpha) v . grad_x alpha
         + 1/2 Im integral conj(alpha) F . grad_v alpha

computed with the same centered differences the solver uses, so its drift
measures solver consistency rather than mixing discretizations.

Globality monitors report the force sup, density L^p norms for p in the
admissible window d*[1 - 1/kappa, 1), and moments M_k against the threshold
k >= ((1 - 1/kappa) d - 1) d; they never gate a run.
"""

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .chartuple import characteristic_tuple
from .errors import DomainError, GridMismatch
from .fields import (RealField, SpatialField, WaveField, centered_difference,
                     lp_norm, modulus_squared, vector_magnitude)
from .interaction import convolve_potential_fft
from .norms import unit_sphere_area


# ---------------------------------------------------------------------------
# velocity moments
# ---------------------------------------------------------------------------

@dataclass
class MomentReport:
    k: float
    M_k: float
    m_k: SpatialField


def _speed_power(grid, k):
    """|v|^k on the velocity section, broadcastable over the phase grid."""
    vmesh = np.meshgrid(*[grid.v_axis(i) for i in range(grid.d)],
                        indexing="ij", sparse=True)
    v2 = sum(m * m for m in vmesh)
    if k == 0:
        return np.ones(np.broadcast_shapes(*[m.shape for m in vmesh]))
    return np.asarray(v2) ** (k / 2.0)


def velocity_moment(alpha, k) -> MomentReport:
    """k-th local and global velocity moments of |alpha|^2 (or of f)."""
    if k < 0:
        raise DomainError(f"moment order must be >= 0, got {k}")
    g = alpha.grid
    f = modulus_squared(alpha).values if isinstance(alpha, WaveField) \
        else alpha.values
    weight = _speed_power(g, k)
    local = (f * weight).sum(axis=tuple(range(g.d, 2 * g.d))) * g.v_cell_volume
    total = float(local.sum() * g.x_cell_volume)
    return MomentReport(k=float(k), M_k=total, m_k=SpatialField(g, local))


def moment_scalar(alpha, k):
    """M_k without materializing the local field (cheap per-step monitor)."""
    g = alpha.grid
    f = modulus_squared(alpha).values if isinstance(alpha, WaveField) \
        else alpha.values
    vsum = f.sum(axis=tuple(range(0, g.d))) * g.x_cell_volume
    weight = _speed_power(g, k)
    return float(np.sum(vsum * weight) * g.v_cell_volume)


# ---------------------------------------------------------------------------
# moment interpolation inequality
# ---------------------------------------------------------------------------

@dataclass
class MomentInequalityReport:
    k: float
    l: float
    p: float
    r: float
    lhs: float
    rhs: float
    constant: float
    passed: bool


def moment_constant(k, l, p, d):
    """Closed-form constant of the moment interpolation estimate.

    With q the conjugate exponent of p, the constant is

        [ ((k-l)/(l+d/q))^((l+d/q)/(k+d/q)) + ((l+d/q)/(k-l))^((k-l)/(k+d/q)) ]
        * ( sigma_d / (l q + d) )^((k-l)/(k q + d))

    using the conventions 0^0 = 1 and inf^0 = 1 at the degenerate corners
    (l = k, or l + d/q = 0 for p = 1, l = 0).
    """
    if not (0 <= l <= k):
        raise DomainError(f"need 0 <= l <= k, got l={l}, k={k}")
    if p != np.inf and p < 1:
        raise DomainError(f"p must be >= 1 or inf, got {p}")
    if k == l:
        return 1.0
    q = 1.0 if p == np.inf else (math.inf if p == 1 else p / (p - 1.0))
    dq = 0.0 if q == math.inf else d / q
    a1_base = (k - l) / (l + dq) if (l + dq) > 0 else math.inf
    a1_exp = (l + dq) / (k + dq)
    a2_base = (l + dq) / (k - l)
    a2_exp = (k - l) / (k + dq)
    first = 1.0 if (a1_base == math.inf and a1_exp == 0) else \
        (0.0 if a1_base == 0 else a1_base ** a1_exp)
    if a1_base == math.inf and a1_exp > 0:
        raise DomainError("degenerate exponents: constant diverges")
    second = a2_base ** a2_exp
    sigma = unit_sphere_area(d)
    if q == math.inf:
        geom = 1.0   # exponent (k-l)/(kq+d) -> 0
    else:
        geom = (sigma / (l * q + d)) ** ((k - l) / (k * q + d))
    return (first + second) * geom


def moment_exponent_r(k, l, p, d):
    """Target Lebesgue exponent r = (k + d(p-1)/p) / (l + (k-l)/p + d(p-1)/p)."""
    if p == np.inf:
        return (k + d) / (l + d)
    return (k + d * (p - 1.0) / p) / (l + (k - l) / p + d * (p - 1.0) / p)


def moment_inequality_check(alpha: WaveField, k, l, p) -> MomentInequalityReport:
    """Evaluate both sides of the moment estimate and report pass/fail.

    lhs  = || m_l ||_r on the x-grid
    rhs  = c_{k,l,p} ||alpha||_{2p}^(2p(k-l)/(pk+(p-1)d)) M_k^((lp+d(p-1))/(pk+(p-1)d))
    """
    g = alpha.grid
    d = g.d
    r = moment_exponent_r(k, l, p, d)
    c = moment_constant(k, l, p, d)
    lhs = lp_norm(velocity_moment(alpha, l).m_k, r)
    M_k = velocity_moment(alpha, k).M_k
    if p == np.inf:
        alpha_norm = lp_norm(alpha, np.inf)
        e_alpha = 2.0 * (k - l) / (k + d)
        e_moment = (l + d) / (k + d)
    else:
        alpha_norm = lp_norm(alpha, 2.0 * p)
        denom = p * k + (p - 1.0) * d
        e_alpha = 2.0 * p * (k - l) / denom
        e_moment = (l * p + d * (p - 1.0)) / denom
    rhs = c * alpha_norm ** e_alpha * M_k ** e_moment
    passed = bool(lhs <= rhs * (1.0 + 1e-12))
    return MomentInequalityReport(k=float(k), l=float(l), p=float(p), r=r,
                                  lhs=lhs, rhs=rhs, constant=c, passed=passed)


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

@dataclass
class EnergyReport:
    kinetic: float
    potential: float
    H: float
    H_vl: float


def energy_terms(alpha, tup, kernel):
    """(H, H_vl) from a field and its characteristic tuple."""
    g = alpha.grid
    f = modulus_squared(alpha).values if isinstance(alpha, WaveField) \
        else alpha.values
    kinetic = 0.5 * moment_scalar(alpha, 2)

    U = convolve_potential_fft(tup.rho, kernel)
    potential = 0.5 * float(np.sum(tup.rho.values * U.values)) * g.x_cell_volume
    H = kinetic + potential

    if not isinstance(alpha, WaveField):
        return H, 0.0

    conj = np.conj(alpha.values)
    w = g.cell_volume
    acc = 0.0
    for c in range(g.d):
        dxa = centered_difference(alpha.values, c, g.dx[c])
        vc = g.v_axis(c).reshape(
            (1,) * g.d + tuple(g.nv[c] if i == c else 1 for i in range(g.d)))
        acc += float(np.sum((conj * dxa).imag * vc))
    Fvals = tup.force.values
    for c in range(g.d):
        dva = centered_difference(alpha.values, g.d + c, g.dv[c])
        Fc = Fvals[c].reshape(g.xshape + (1,) * g.d)
        acc += float(np.sum((conj * dva).imag * Fc))
    h_vl = 0.5 * acc * w
    return H, h_vl


def energy(alpha, kernel, conv_method="fft") -> EnergyReport:
    """EnergyReport for a WaveField (H and H_vl) or RealField f (H only)."""
    if isinstance(alpha, WaveField):
        tup = characteristic_tuple(alpha, kernel, conv_method)
    else:
        from .chartuple import density_of
        from .interaction import convolve_gradient
        rho = density_of(alpha)
        force = convolve_gradient(rho, kernel, conv_method)
        from .chartuple import CharacteristicTuple
        from .fields import SpatialComplexVectorField
        g = alpha.grid
        tup = CharacteristicTuple(
            rho=rho, force=force,
            phase_density=SpatialComplexVectorField(
                g, np.zeros((g.d,) + g.xshape, dtype=np.complex128)),
            phase_force=SpatialField(g, np.zeros(g.xshape, dtype=np.complex128)))
    H, H_vl = energy_terms(alpha, tup, kernel)
    kinetic = 0.5 * moment_scalar(alpha, 2)
    return EnergyReport(kinetic=kinetic, potential=H - kinetic, H=H, H_vl=H_vl)


def symplectic_form(alpha: WaveField, beta: WaveField):
    """omega(alpha, beta) = Im integral alpha conj(beta) dz."""
    if not alpha.grid.same_layout(beta.grid):
        raise GridMismatch("symplectic form needs matching grids")
    return float(np.sum((alpha.values * np.conj(beta.values)).imag)
                 * alpha.grid.cell_volume)


# ---------------------------------------------------------------------------
# globality monitors
# ---------------------------------------------------------------------------

def admissible_density_exponents(d, kappa):
    """Half-open window [d(1 - 1/kappa), d) for the density criterion."""
    return (d * (1.0 - 1.0 / kappa), float(d))


def admissible_moment_threshold(d, kappa):
    """Moment order threshold ((1 - 1/kappa) d - 1) d."""
    return ((1.0 - 1.0 / kappa) * d - 1.0) * d


@dataclass
class GlobalityMonitor:
    times: list
    force_inf: list
    rho_p: dict          # p -> series
    moments: dict        # k -> series
    p_window: tuple
    k_threshold: float
    p_admissible: dict   # p -> bool
    k_admissible: dict   # k -> bool
    flags: dict = dfield(default_factory=dict)


def globality_monitor(traj, p_list, k_list, kappa=None,
                      thresholds=None) -> GlobalityMonitor:
    """Evaluate the three globality series on a trajectory's stored states.

    The monitor only reports: the criteria are sufficient conditions for
    global existence, not run-control logic.  ``thresholds`` optionally maps
    {"force_inf": x, ("rho", p): x, ("moment", k): x} to cap checks recorded
    in ``flags``.
    """
    grid = traj.grid
    kappa = float(kappa) if kappa is not None else float(2 * grid.d)
    p_window = admissible_density_exponents(grid.d, kappa)
    k_thresh = admissible_moment_threshold(grid.d, kappa)

    times = []
    force_series = []
    rho_series = {p: [] for p in p_list}
    moment_series = {k: [] for k in k_list}
    for t, alpha in traj.stored:
        times.append(t)
        tup = traj.tuples.get(t)
        if tup is None:
            from .chartuple import spatial_density
            rho = spatial_density(alpha)
            force_series.append(float("nan"))
        else:
            rho = tup.rho
            force_series.append(float(vector_magnitude(tup.force).max()))
        for p in p_list:
            rho_series[p].append(lp_norm(rho, p))
        for k in k_list:
            moment_series[k].append(moment_scalar(alpha, k))

    flags = {}
    if thresholds:
        if "force_inf" in thresholds:
            flags["force_inf"] = max(force_series) <= thresholds["force_inf"]
        for p in p_list:
            key = ("rho", p)
            if key in thresholds:
                flags[key] = max(rho_series[p]) <= thresholds[key]
        for k in k_list:
            key = ("moment", k)
            if key in thresholds:
                flags[key] = max(moment_series[k]) <= thresholds[key]

    return GlobalityMonitor(
        times=times, force_inf=force_series, rho_p=rho_series,
        moments=moment_series, p_window=p_window, k_threshold=k_thresh,
        p_admissible={p: p_window[0] <= p < p_window[1] for p in p_list},
        k_admissible={k: k >= k_thresh for k in k_list},
        flags=flags)


# ---------------------------------------------------------------------------
# gauge degeneracy experiment
# ---------------------------------------------------------------------------

def gauge_shift(alpha0: WaveField, kernel, config, c):
    """Run the solver with phase forces K and K + i c; return both runs.

    Adding a constant imaginary rate to K leaves |alpha|^2 dynamics
    untouched and multiplies the field by a spatially constant unit-modulus
    factor; the paired trajectories expose exactly that.
    """
    if not math.isfinite(c):
        raise DomainError("gauge constant must be finite")
    from dataclasses import replace
    from .solver import run
    base = run(alpha0, kernel, replace(config, gauge_c=0.0))
    shifted = run(alpha0, kernel, replace(config, gauge_c=float(c)))
    return base, shifted
