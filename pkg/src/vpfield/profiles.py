"""Analytic initial-data profiles and the test-corpus generator.

Profiles are evaluated at node centers, so ``sample`` is a pure function of
(grid, profile); the random-mixture profile carries its own seed and is a
pure function of it.  The Gaussian family is parameterized so that the
*density* |alpha|^2 is a Gaussian with the stated sigmas, which keeps
moment identities simple: with normalize=True, ||alpha||_2 = 1 analytically
and the k=2 velocity moment is sum(sigma_v_i^2) per unit mass.
"""

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .fields import WaveField
from .grid import PhaseGrid


@dataclass(frozen=True)
class ZeroProfile:
    kind: str = "zero"


@dataclass(frozen=True)
class GaussianProfile:
    """alpha = A exp(-|x-cx|^2/(4 sx^2) - |v-cv|^2/(4 sv^2)) e^{i(kv.v + kx.x)}.

    |alpha|^2 then is a Gaussian density with per-axis standard deviations
    sigma_x, sigma_v.  With normalize=True the amplitude makes the analytic
    L2 norm of alpha equal to amplitude (so amplitude=1 gives unit mass).
    The optional phase wave vectors give the plane-wave-phase family
    g(x, v) e^{i k.v}.
    """

    center_x: tuple = (0.0, 0.0, 0.0)
    center_v: tuple = (0.0, 0.0, 0.0)
    sigma_x: tuple = (1.0, 1.0, 1.0)
    sigma_v: tuple = (1.0, 1.0, 1.0)
    amplitude: complex = 1.0
    wave_k_v: tuple = (0.0, 0.0, 0.0)
    wave_k_x: tuple = (0.0, 0.0, 0.0)
    normalize: bool = True
    kind: str = "gaussian"


@dataclass(frozen=True)
class SmoothBallProfile:
    """Smoothed indicator of a phase-space ball via a tanh shoulder."""

    center: tuple = (0.0,) * 6
    radius: float = 1.0
    width: float = 0.25
    amplitude: complex = 1.0
    kind: str = "smooth_ball"


@dataclass(frozen=True)
class RandomSmoothProfile:
    """Seeded superposition of random Gaussian bumps with phase waves.

    Deterministic in (seed, n_bumps, ranges); used to build the random
    smooth corpora for the property batteries.
    """

    seed: int = 0
    n_bumps: int = 3
    sigma_range: tuple = (0.6, 1.4)
    center_spread: float = 0.35   # fraction of the half box span
    wave_max: float = 1.0
    amplitude: float = 1.0
    kind: str = "random_smooth"


def _axis_tuple(val, d):
    if np.isscalar(val):
        return (float(val),) * d
    return tuple(float(v) for v in val)


def _gaussian_values(grid, prof):
    d = grid.d
    cx = _axis_tuple(prof.center_x, d)
    cv = _axis_tuple(prof.center_v, d)
    sx = _axis_tuple(prof.sigma_x, d)
    sv = _axis_tuple(prof.sigma_v, d)
    kv = _axis_tuple(prof.wave_k_v, d)
    kx = _axis_tuple(prof.wave_k_x, d)
    mesh = grid.phase_mesh()

    log_amp = 0.0
    phase = 0.0
    for i in range(d):
        log_amp = log_amp - (mesh[i] - cx[i]) ** 2 / (4.0 * sx[i] ** 2)
        phase = phase + kx[i] * mesh[i]
    for i in range(d):
        log_amp = log_amp - (mesh[d + i] - cv[i]) ** 2 / (4.0 * sv[i] ** 2)
        phase = phase + kv[i] * mesh[d + i]

    amp = complex(prof.amplitude)
    if prof.normalize:
        # ||alpha||_2^2 = |A|^2 (2 pi)^d prod sigma_x prod sigma_v
        mass = (2.0 * math.pi) ** d * math.prod(sx) * math.prod(sv)
        amp = amp / math.sqrt(mass)
    return amp * np.exp(log_amp + 1j * phase)


def _smooth_ball_values(grid, prof):
    mesh = grid.phase_mesh()
    c = prof.center
    r2 = 0.0
    for i in range(2 * grid.d):
        r2 = r2 + (mesh[i] - c[i]) ** 2
    r = np.sqrt(r2)
    shoulder = 0.5 * (1.0 - np.tanh((r - prof.radius) / prof.width))
    return complex(prof.amplitude) * shoulder.astype(np.complex128)


def _random_smooth_values(grid, prof):
    rng = np.random.default_rng(prof.seed)
    d = grid.d
    out = np.zeros(grid.shape, dtype=np.complex128)
    x_span = [hi - lo for lo, hi in zip(grid.x_lo, grid.x_hi)]
    v_span = [hi - lo for lo, hi in zip(grid.v_lo, grid.v_hi)]
    x_mid = [(hi + lo) / 2 for lo, hi in zip(grid.x_lo, grid.x_hi)]
    v_mid = [(hi + lo) / 2 for lo, hi in zip(grid.v_lo, grid.v_hi)]
    for _ in range(prof.n_bumps):
        s_lo, s_hi = prof.sigma_range
        bump = GaussianProfile(
            center_x=tuple(x_mid[i] + prof.center_spread * x_span[i]
                           * rng.uniform(-0.5, 0.5) for i in range(d)),
            center_v=tuple(v_mid[i] + prof.center_spread * v_span[i]
                           * rng.uniform(-0.5, 0.5) for i in range(d)),
            sigma_x=tuple(rng.uniform(s_lo, s_hi) * x_span[i] / 8.0 for i in range(d)),
            sigma_v=tuple(rng.uniform(s_lo, s_hi) * v_span[i] / 8.0 for i in range(d)),
            amplitude=rng.uniform(0.3, 1.0) * np.exp(2j * math.pi * rng.uniform()),
            wave_k_v=tuple(rng.uniform(-prof.wave_max, prof.wave_max) for _ in range(d)),
            wave_k_x=tuple(rng.uniform(-prof.wave_max, prof.wave_max) for _ in range(d)),
            normalize=True)
        out += _gaussian_values(grid, bump)
    return prof.amplitude * out


def sample(grid: PhaseGrid, profile) -> WaveField:
    """Sample an analytic profile at the node centers of a grid."""
    if isinstance(profile, ZeroProfile):
        values = np.zeros(grid.shape, dtype=np.complex128)
    elif isinstance(profile, GaussianProfile):
        values = _gaussian_values(grid, profile)
    elif isinstance(profile, SmoothBallProfile):
        values = _smooth_ball_values(grid, profile)
    elif isinstance(profile, RandomSmoothProfile):
        values = _random_smooth_values(grid, profile)
    else:
        raise TypeError(f"unknown profile {profile!r}")
    if not np.all(np.isfinite(values)):
        raise ValueError("profile parameters produced non-finite samples")
    return WaveField(grid, values)
