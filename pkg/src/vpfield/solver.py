"""Wave-density evolution: transport stepper and fixed-point validation mode.

Production scheme (``run``): on each step [t, t+dt] trace characteristics
backward from every node under the sampled self-consistent force, pull the
field back from the foot point, and multiply by exp of the trapezoidal line
integral of the phase force K along the path:

    alpha(t+dt, z) = alpha(t, Z(t, t+dt, z)) * exp( int_t^{t+dt} K(tau, X(tau)) dtau )

Because K is purely imaginary (up to roundoff), the multiplier has unit
modulus and |alpha| at a node equals the interpolated foot-point modulus.
Modes: "frozen" holds the force/phase-force at their values at time t;
"pc1" runs a frozen predictor to build fields at t+dt and then re-advects
with both endpoints blended linearly in time.

Validation scheme (``picard_solve``): whole-trajectory fixed-point
iteration.  alpha_0(t) = initial datum for all t; iterate n+1 pulls the
initial datum back along the flow of iterate n's force and applies iterate
n's accumulated phase integral from 0 to t.  Memory for the stored time
samples limits this to reduced resolution; its agreement with the
incremental stepper is itself a test, since both discretize the same fixed
point.
"""

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .chartuple import characteristic_tuple, gradient, spatial_density
from .errors import BlowUp, GridMismatch, NoContraction, NonFiniteField
from .fields import WaveField, lp_norm, modulus_squared, multilinear, vector_magnitude
from .flow import ForceSampler, integrate_flow
from .norms import a_norm_values
from .parallel import map_blocks


@dataclass
class SolverConfig:
    dt: float = 0.05
    t_end: float = 0.5
    substeps: int = 4
    mode: str = "pc1"               # or "frozen"
    conv_method: str = "fft"
    kappa: float = None             # default: phase-space dimension 2d
    radius_set: tuple = (0.0,)      # radii for per-step / distance a-norms
    picard_n_max: int = 12
    picard_tol: float = 1e-6
    guard_factor: float = 25.0      # blow-up when sup norm grows past this
    store_every: int = 1
    gauge_c: float = 0.0            # adds i*c to the phase force

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt - 1e-15:
            raise ValueError("t_end must be >= dt")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.mode not in ("frozen", "pc1"):
            raise ValueError(f"mode must be 'frozen' or 'pc1', got {self.mode!r}")
        if self.picard_n_max < 1:
            raise ValueError("picard_n_max must be >= 1")

    def kappa_for(self, grid):
        return float(self.kappa) if self.kappa is not None else float(2 * grid.d)


@dataclass
class DiagnosticsRow:
    """One CSV row of runtime monitors."""

    t: float
    l2: float
    linf: float
    a_norm: float
    rho_inf: float
    force_inf: float
    re_k_max: float
    energy_h: float
    energy_hvl: float
    moment2: float

    HEADER = ("t [time],l2_norm [sqrt(mass)],sup_norm [field],a_norm [field],"
              "rho_inf [mass/volume],force_inf [accel],re_k_max [1/time],"
              "energy_h [energy],energy_hvl [energy],moment2 [mass*vel^2]")

    def csv(self):
        return ",".join(repr(v) for v in (
            self.t, self.l2, self.linf, self.a_norm, self.rho_inf,
            self.force_inf, self.re_k_max, self.energy_h, self.energy_hvl,
            self.moment2))


@dataclass
class Trajectory:
    """Time-indexed states plus cached tuples and per-step diagnostics."""

    grid: object
    times: list = dfield(default_factory=list)
    stored: list = dfield(default_factory=list)    # (t, WaveField) pairs
    tuples: dict = dfield(default_factory=dict)    # t -> CharacteristicTuple
    rows: list = dfield(default_factory=list)
    provenance: str = "transport"

    def store(self, t, alpha):
        self.stored.append((float(t), alpha))

    def final(self):
        return self.stored[-1][1]

    def field_at(self, t, tol=1e-9):
        for tt, f in self.stored:
            if abs(tt - t) <= tol:
                return f
        raise KeyError(f"no stored field at t={t}")

    @property
    def stored_times(self):
        return [t for t, _ in self.stored]

    def l2_drift(self):
        l2s = [row.l2 for row in self.rows]
        if not l2s or l2s[0] == 0:
            return 0.0
        return max(abs(v - l2s[0]) for v in l2s) / l2s[0]


class _ScalarSampler:
    """Complex scalar field samples on the x-grid, linear in time."""

    def __init__(self, grid, times, fields):
        self.grid = grid
        self.times = np.asarray(times, dtype=np.float64)
        self.fields = [np.ascontiguousarray(getattr(f, "values", f),
                                            dtype=np.complex128)
                       for f in fields]

    def blended(self, t):
        ts = self.times
        if t <= ts[0] or ts.size == 1:
            return self.fields[0]
        if t >= ts[-1]:
            return self.fields[-1]
        j = int(np.searchsorted(ts, t) - 1)
        theta = (t - ts[j]) / (ts[j + 1] - ts[j])
        return (1.0 - theta) * self.fields[j] + theta * self.fields[j + 1]

    def values_at(self, t, positions):
        return multilinear(self.blended(t), self.grid.x_lo, self.grid.dx,
                           positions)


def _advect(alpha_values, grid, force_sampler, k_sampler, t_hi, t_lo,
            substeps, gauge_c):
    """Pull alpha back along characteristics from t_hi to t_lo, all nodes.

    Returns the new value array at time t_hi.  Node blocks are independent:
    each block integrates its own seeds and accumulates the trapezoidal K
    line integral through the flow visitor, so the work parallelizes
    deterministically.
    """
    out = np.empty(grid.num_nodes, dtype=np.complex128)
    n_nodes = grid.num_nodes
    dt_total = t_hi - t_lo
    sub_dt = dt_total / substeps

    def do_block(a, b):
        idx = np.arange(a, b, dtype=np.int64)
        seeds = grid.node_coordinates(idx)
        if k_sampler is not None:
            kacc = np.zeros(b - a, dtype=np.complex128)
            state = {"count": 0}

            def visitor(tau, X):
                k = state["count"]
                weight = 0.5 if (k == 0 or k == substeps) else 1.0
                np.add(kacc, weight * k_sampler.values_at(tau, X), out=kacc)
                state["count"] = k + 1
        else:
            kacc = 0.0
            visitor = None

        fmap = integrate_flow(force_sampler, t_lo, t_hi, seeds,
                              substeps=substeps, visitor=visitor)
        feet = np.concatenate([fmap.X, fmap.V], axis=1)
        vals = multilinear(alpha_values, grid.lows, grid.spacings, feet)
        phase = kacc * abs(sub_dt) + 1j * gauge_c * dt_total
        out[a:b] = vals * np.exp(phase)

    map_blocks(do_block, n_nodes)
    return out.reshape(grid.shape)


def _zero_force_sampler(grid, t0):
    return ForceSampler.constant(grid, np.zeros((grid.d,) + grid.xshape), t0)


def transport_step(alpha_t: WaveField, kernel, dt, mode="pc1", substeps=4,
                   conv_method="fft", gauge_c=0.0, tuple_t=None, t=0.0):
    """One semi-Lagrangian step [t, t+dt]; returns (alpha_next, tuple_t).

    The characteristic tuple at time t is computed if not supplied and is
    returned so callers can reuse it for diagnostics.  With the zero kernel
    both modes coincide (no force, no phase), so the predictor is skipped.
    """
    grid = alpha_t.grid
    if tuple_t is None:
        tuple_t = characteristic_tuple(alpha_t, kernel, conv_method)
    t_hi = t + dt

    if kernel.is_zero:
        sampler = _zero_force_sampler(grid, t)
        k_sampler = None
        values = _advect(alpha_t.values, grid, sampler, k_sampler, t_hi, t,
                         substeps, gauge_c)
        return WaveField(grid, values), tuple_t

    if mode == "frozen":
        sampler = ForceSampler.constant(grid, tuple_t.force.values, t)
        k_sampler = _ScalarSampler(grid, [t], [tuple_t.phase_force.values])
    else:
        # predictor: frozen pass to t+dt, then blend both endpoints
        frozen_sampler = ForceSampler.constant(grid, tuple_t.force.values, t)
        frozen_k = _ScalarSampler(grid, [t], [tuple_t.phase_force.values])
        pred_values = _advect(alpha_t.values, grid, frozen_sampler, frozen_k,
                              t_hi, t, substeps, gauge_c)
        pred_tuple = characteristic_tuple(WaveField(grid, pred_values),
                                          kernel, conv_method)
        sampler = ForceSampler(grid, [t, t_hi],
                               [tuple_t.force.values, pred_tuple.force.values])
        k_sampler = _ScalarSampler(grid, [t, t_hi],
                                   [tuple_t.phase_force.values,
                                    pred_tuple.phase_force.values])

    values = _advect(alpha_t.values, grid, sampler, k_sampler, t_hi, t,
                     substeps, gauge_c)
    if not np.all(np.isfinite(values)):
        raise NonFiniteField("transport step produced non-finite values")
    return WaveField(grid, values), tuple_t


def _diag_row(t, alpha, tup, kernel, config):
    from .diagnostics import energy_terms, moment_scalar
    g = alpha.grid
    kappa = config.kappa_for(g)
    a_val, _, _ = a_norm_values(alpha.values, g.spacings, kappa, 2.0,
                                config.radius_set)
    k_vals = tup.phase_force.values
    re_k = float(np.abs(k_vals.real).max()) if kernel and not kernel.is_zero else 0.0
    H, H_vl = energy_terms(alpha, tup, kernel)
    return DiagnosticsRow(
        t=float(t),
        l2=lp_norm(alpha, 2),
        linf=lp_norm(alpha, np.inf),
        a_norm=a_val,
        rho_inf=float(tup.rho.values.max()) if tup.rho.values.size else 0.0,
        force_inf=float(vector_magnitude(tup.force).max()),
        re_k_max=re_k,
        energy_h=H,
        energy_hvl=H_vl,
        moment2=moment_scalar(alpha, 2),
    )


def run(alpha0: WaveField, kernel, config: SolverConfig) -> Trajectory:
    """Evolve alpha0 with repeated transport steps and per-step diagnostics.

    Aborts with BlowUp (carrying the partial trajectory) on non-finite
    values or when the sup norm exceeds guard_factor times its start.
    """
    grid = alpha0.grid
    traj = Trajectory(grid=grid, provenance="transport")
    n_steps = int(round(config.t_end / config.dt))
    times = [config.dt * k for k in range(n_steps + 1)]
    traj.times = times
    alpha = alpha0
    guard0 = lp_norm(alpha0, np.inf)
    traj.store(0.0, alpha0)

    tup = None
    for k in range(n_steps + 1):
        t = times[k]
        if tup is None:
            tup = characteristic_tuple(alpha, kernel, config.conv_method)
        traj.tuples[t] = tup
        row = _diag_row(t, alpha, tup, kernel, config)
        traj.rows.append(row)
        if not all(math.isfinite(v) for v in (row.l2, row.linf)):
            raise BlowUp(f"non-finite norms at t={t}", partial=traj)
        if guard0 > 0 and row.linf > config.guard_factor * guard0:
            raise BlowUp(f"sup norm grew past guard at t={t}", partial=traj)
        if k == n_steps:
            break
        try:
            alpha, _ = transport_step(alpha, kernel, config.dt,
                                      mode=config.mode,
                                      substeps=config.substeps,
                                      conv_method=config.conv_method,
                                      gauge_c=config.gauge_c,
                                      tuple_t=tup, t=t)
        except NonFiniteField as exc:
            raise BlowUp(str(exc), partial=traj) from exc
        tup = None
        t_next = times[k + 1]
        if (k + 1) % config.store_every == 0 or k + 1 == n_steps:
            traj.store(t_next, alpha)
    return traj


# ---------------------------------------------------------------------------
# whole-trajectory fixed-point iteration
# ---------------------------------------------------------------------------

@dataclass
class PicardLog:
    distances: list
    converged: bool
    iterations: int


def picard_solve(alpha0: WaveField, kernel, config: SolverConfig):
    """Fixed-point iteration of the transport representation on [0, t_end].

    Iterate 0 is constant-in-time initial data.  Each sweep rebuilds the
    trajectory from the previous iterate's force and phase force, measures
    sup_t of the a-norm of the update, and stops when it drops below
    picard_tol.  Distances that grow for n >= 3 raise NoContraction: the
    interval is too long for the contraction regime.
    """
    grid = alpha0.grid
    n_steps = int(round(config.t_end / config.dt))
    times = np.array([config.dt * j for j in range(n_steps + 1)])
    kappa = config.kappa_for(grid)

    current = [alpha0.values.copy() for _ in times]
    distances = []
    converged = False
    n_done = 0

    for n in range(config.picard_n_max):
        tuples = [characteristic_tuple(WaveField(grid, vals), kernel,
                                       config.conv_method)
                  for vals in current]
        force_sampler = ForceSampler(grid, times, [tp.force.values for tp in tuples])
        if kernel.is_zero:
            k_sampler = None
        else:
            k_sampler = _ScalarSampler(grid, times,
                                       [tp.phase_force.values for tp in tuples])

        new_states = [alpha0.values.copy()]
        for j in range(1, len(times)):
            t_j = float(times[j])
            substeps = config.substeps * j
            vals = _advect(alpha0.values, grid, force_sampler, k_sampler,
                           t_j, 0.0, substeps, config.gauge_c)
            if not np.all(np.isfinite(vals)):
                raise BlowUp(f"picard iterate {n + 1} non-finite at t={t_j}")
            new_states.append(vals)

        dist = 0.0
        for old, new in zip(current, new_states):
            val, _, _ = a_norm_values(new - old, grid.spacings, kappa, 2.0,
                                      config.radius_set)
            dist = max(dist, val)
        distances.append(dist)
        current = new_states
        n_done = n + 1
        if dist < config.picard_tol:
            converged = True
            break
        if len(distances) >= 3 and distances[-1] > distances[-2] > 0:
            raise NoContraction(
                f"picard distances grew at iteration {n_done}",
                partial=_picard_trajectory(grid, times, current),
                log=PicardLog(distances, False, n_done))

    traj = _picard_trajectory(grid, times, current)
    traj.provenance = f"picard({n_done})"
    return traj, PicardLog(distances, converged, n_done)


def _picard_trajectory(grid, times, states):
    traj = Trajectory(grid=grid, provenance="picard")
    traj.times = [float(t) for t in times]
    for t, vals in zip(times, states):
        traj.store(float(t), WaveField(grid, vals))
    return traj


def solution_distance(traj1: Trajectory, traj2: Trajectory, kappa,
                      radius_set=(0.0,)):
    """a-norm gap series between two trajectories at matching stored times."""
    if not traj1.grid.same_layout(traj2.grid):
        raise GridMismatch("trajectories live on different grids")
    t1 = traj1.stored_times
    t2 = traj2.stored_times
    if len(t1) != len(t2) or any(abs(a - b) > 1e-9 for a, b in zip(t1, t2)):
        raise GridMismatch("trajectories store different time samples")
    gaps = []
    for (t, f1), (_, f2) in zip(traj1.stored, traj2.stored):
        val, _, _ = a_norm_values(f1.values - f2.values, traj1.grid.spacings,
                                  kappa, 2.0, radius_set)
        gaps.append((t, val))
    return gaps
