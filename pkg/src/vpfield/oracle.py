"""Independent classical transport solver on the real density f.

Advances f(t, z) semi-Lagrangially, f(t+dt, z) = f(t, Z(t, t+dt, z)),
reusing the flow and interaction machinery of the wave solver but with no
phase factor.  Comparing |alpha(t)|^2 against this oracle isolates exactly
the phase logic of the wave formulation: the convolution and ODE code are
shared on purpose and tested elsewhere.

Interpolation of nonnegative data can undershoot; values are clipped at 0
and the clipped mass is logged (budgeted at 1e-4 of the total per run).
"""

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .chartuple import density_of
from .errors import BlowUp, GridMismatch, NonFiniteField
from .fields import RealField, lp_norm, modulus_squared, multilinear
from .flow import ForceSampler, integrate_flow
from .interaction import convolve_gradient
from .parallel import map_blocks


@dataclass
class DensityTrajectory:
    grid: object
    times: list = dfield(default_factory=list)
    stored: list = dfield(default_factory=list)   # (t, RealField)
    rho: dict = dfield(default_factory=dict)      # t -> SpatialField
    force: dict = dfield(default_factory=dict)    # t -> SpatialVectorField
    clipped_mass: float = 0.0
    mass_series: list = dfield(default_factory=list)

    def store(self, t, f):
        self.stored.append((float(t), f))

    def final(self):
        return self.stored[-1][1]

    @property
    def stored_times(self):
        return [t for t, _ in self.stored]

    def mass_drift(self):
        if not self.mass_series or self.mass_series[0] == 0:
            return 0.0
        m0 = self.mass_series[0]
        return max(abs(m - m0) for m in self.mass_series) / m0


def _advect_density(f_values, grid, sampler, t_hi, t_lo, substeps):
    """Backward-characteristic pullback of f (raw, unclipped)."""
    out = np.empty(grid.num_nodes, dtype=np.float64)

    def do_block(a, b):
        seeds = grid.node_coordinates(np.arange(a, b, dtype=np.int64))
        fmap = integrate_flow(sampler, t_lo, t_hi, seeds, substeps=substeps)
        feet = np.concatenate([fmap.X, fmap.V], axis=1)
        out[a:b] = multilinear(f_values, grid.lows, grid.spacings, feet).real

    map_blocks(do_block, grid.num_nodes)
    return out.reshape(grid.shape)


def vlasov_step(f: RealField, kernel, dt, mode="pc1", substeps=4,
                conv_method="fft", t=0.0, rho_t=None):
    """One classical step; returns (f_next, rho_t, force_t, clipped_mass)."""
    grid = f.grid
    if np.any(f.values < 0):
        raise NonFiniteField("vlasov_step expects nonnegative f")
    rho = rho_t if rho_t is not None else density_of(f)
    force = convolve_gradient(rho, kernel, conv_method)
    t_hi = t + dt

    if kernel.is_zero:
        sampler = ForceSampler.constant(grid, np.zeros((grid.d,) + grid.xshape), t)
    elif mode == "frozen":
        sampler = ForceSampler.constant(grid, force.values, t)
    else:
        pred_sampler = ForceSampler.constant(grid, force.values, t)
        pred = _advect_density(f.values, grid, pred_sampler, t_hi, t, substeps)
        pred_rho = density_of(RealField(grid, np.maximum(pred, 0.0)))
        pred_force = convolve_gradient(pred_rho, kernel, conv_method)
        sampler = ForceSampler(grid, [t, t_hi], [force.values, pred_force.values])

    vals = _advect_density(f.values, grid, sampler, t_hi, t, substeps).reshape(-1)
    clipped = float(-vals[vals < 0].sum()) * grid.cell_volume
    f_next = RealField(grid, np.maximum(vals, 0.0).reshape(grid.shape))
    if not np.all(np.isfinite(f_next.values)):
        raise NonFiniteField("vlasov step produced non-finite values")
    return f_next, rho, force, clipped


def run_vlasov(f0: RealField, kernel, config) -> DensityTrajectory:
    """Evolve f0 with repeated vlasov_step; mirrors solver.run's schedule."""
    grid = f0.grid
    traj = DensityTrajectory(grid=grid)
    n_steps = int(round(config.t_end / config.dt))
    times = [config.dt * k for k in range(n_steps + 1)]
    traj.times = times
    f = f0
    traj.store(0.0, f0)
    traj.mass_series.append(lp_norm(f0, 1))
    for k in range(n_steps):
        t = times[k]
        try:
            f, rho, force, clipped = vlasov_step(
                f, kernel, config.dt, mode=config.mode,
                substeps=config.substeps, conv_method=config.conv_method, t=t)
        except NonFiniteField as exc:
            raise BlowUp(str(exc), partial=traj) from exc
        traj.rho[t] = rho
        traj.force[t] = force
        traj.clipped_mass += clipped
        t_next = times[k + 1]
        traj.mass_series.append(lp_norm(f, 1))
        if (k + 1) % config.store_every == 0 or k + 1 == n_steps:
            traj.store(t_next, f)
    return traj


@dataclass
class CompareRow:
    t: float
    gap_l1: float
    gap_l2: float
    gap_linf: float
    rel_l1: float


def compare(traj_alpha, traj_f) -> list:
    """Gap series between |alpha(t)|^2 and the oracle f(t) at stored times."""
    if not traj_alpha.grid.same_layout(traj_f.grid):
        raise GridMismatch("trajectories live on different grids")
    ta = traj_alpha.stored_times
    tf = traj_f.stored_times
    if len(ta) != len(tf) or any(abs(a - b) > 1e-9 for a, b in zip(ta, tf)):
        raise GridMismatch("trajectories store different time samples")
    g = traj_alpha.grid
    w = g.cell_volume
    rows = []
    for (t, alpha), (_, f) in zip(traj_alpha.stored, traj_f.stored):
        diff = modulus_squared(alpha).values - f.values
        l1 = float(np.abs(diff).sum() * w)
        l2 = float(math.sqrt((diff * diff).sum() * w))
        linf = float(np.abs(diff).max())
        ref = float(f.values.sum() * w)
        rows.append(CompareRow(t=t, gap_l1=l1, gap_l2=l2, gap_linf=linf,
                               rel_l1=l1 / ref if ref > 0 else math.inf))
    return rows
