"""Characteristic tuple (rho, F, phi, K) of a wave density.

    rho(x) = integral |alpha(x, v)|^2 dv          mass density
    F(x)   = -(grad Gamma * rho)(x)               force
    phi(x) = integral conj(alpha) grad_v alpha dv phase density
    K(x)   = -(grad Gamma . * phi)(x)             phase force (dot contraction)

grad_v is taken by centered differences with zero extension: the discrete
summation-by-parts then makes Re phi vanish identically (up to roundoff)
for box-supported alpha, which is the discrete version of the fact that
phi is imaginary valued.  K inherits this through the real kernel, and the
unit-modulus transport multiplier exp(int K) hinges on it.  Re K is kept
(not zeroed) so the identity is measurable rather than enforced.
"""

from dataclasses import dataclass

import numpy as np

from .fields import (RealField, SpatialComplexVectorField, SpatialField,
                     SpatialVectorField, WaveField, centered_difference,
                     modulus_squared)
from .interaction import convolve_gradient


@dataclass
class CharacteristicTuple:
    rho: SpatialField
    force: SpatialVectorField
    phase_density: SpatialComplexVectorField
    phase_force: SpatialField   # complex scalar

    @property
    def grid(self):
        return self.rho.grid


def gradient(field: WaveField, which="all"):
    """Per-axis centered-difference partials of a phase-grid field.

    which selects the axes: "x" (first d), "v" (last d) or "all" (2d).
    Returns a list of WaveFields in axis order.
    """
    g = field.grid
    if which == "x":
        axes = range(0, g.d)
    elif which == "v":
        axes = range(g.d, 2 * g.d)
    elif which == "all":
        axes = range(0, 2 * g.d)
    else:
        raise ValueError(f"which must be 'x', 'v' or 'all', got {which!r}")
    spac = g.spacings
    return [WaveField(g, centered_difference(field.values, a, spac[a]))
            for a in axes]


def spatial_density(alpha: WaveField) -> SpatialField:
    """rho = v-quadrature of |alpha|^2; nonnegative by construction."""
    g = alpha.grid
    f = modulus_squared(alpha).values
    v_axes = tuple(range(g.d, 2 * g.d))
    return SpatialField(g, f.sum(axis=v_axes) * g.v_cell_volume)


def density_of(f: RealField) -> SpatialField:
    """Same v-quadrature for an already-real phase density f."""
    g = f.grid
    v_axes = tuple(range(g.d, 2 * g.d))
    return SpatialField(g, f.values.sum(axis=v_axes) * g.v_cell_volume)


def phase_density(alpha: WaveField) -> SpatialComplexVectorField:
    """phi = v-quadrature of conj(alpha) * grad_v alpha, per component."""
    g = alpha.grid
    conj = np.conj(alpha.values)
    v_axes = tuple(range(g.d, 2 * g.d))
    comps = []
    for c in range(g.d):
        dv = centered_difference(alpha.values, g.d + c, g.dv[c])
        comps.append((conj * dv).sum(axis=v_axes) * g.v_cell_volume)
    return SpatialComplexVectorField(g, np.stack(comps, axis=0))


def characteristic_tuple(alpha: WaveField, kernel, conv_method="fft",
                         rho=None) -> CharacteristicTuple:
    """Assemble (rho, F, phi, K); pass a precomputed rho to skip that reduction."""
    if rho is None:
        rho = spatial_density(alpha)
    force = convolve_gradient(rho, kernel, conv_method)
    phi = phase_density(alpha)
    phase_force = convolve_gradient(phi, kernel, conv_method)
    return CharacteristicTuple(rho=rho, force=force, phase_density=phi,
                               phase_force=phase_force)
