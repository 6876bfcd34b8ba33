"""Shared fixtures: small grids and seeded random smooth corpora.

Corpus fields are Gaussian-bump mixtures with closed-form gradients so the
norm batteries can test gradient inequalities against analytic derivatives
rather than finite differences.
"""

import math

import numpy as np
import pytest

from vpfield import GridConfig, make_grid


def grid_1d(n=64, half=2.4, vhalf=None):
    """d=1 phase grid (2-D phase space), box [-half, half]^2 by default."""
    vhalf = half if vhalf is None else vhalf
    return make_grid(GridConfig(d=1, nx=(n,), nv=(n,), x_lo=(-half,),
                                x_hi=(half,), v_lo=(-vhalf,), v_hi=(vhalf,)))


def grid_small3d(n=6, bx=4.0, bv=3.2):
    return make_grid(GridConfig(d=3, nx=(n,) * 3, nv=(n,) * 3,
                                x_lo=(-bx,) * 3, x_hi=(bx,) * 3,
                                v_lo=(-bv,) * 3, v_hi=(bv,) * 3))


class MixtureField:
    """Sum of complex Gaussian bumps with analytic gradient on a raw box."""

    def __init__(self, ndim, lows, highs, shape, rng, n_bumps=3,
                 complex_amp=True):
        self.ndim = ndim
        self.lows = np.asarray(lows, dtype=float)
        self.highs = np.asarray(highs, dtype=float)
        self.shape = tuple(shape)
        self.spacings = tuple((self.highs - self.lows) / np.asarray(shape))
        span = self.highs - self.lows
        self.centers = np.stack([
            self.lows + span * rng.uniform(0.3, 0.7, size=ndim)
            for _ in range(n_bumps)])
        self.sigmas = rng.uniform(0.10, 0.22, size=n_bumps) * span.min()
        if complex_amp:
            self.amps = rng.uniform(0.4, 1.0, size=n_bumps) * \
                np.exp(2j * math.pi * rng.uniform(size=n_bumps))
        else:
            self.amps = rng.uniform(0.4, 1.0, size=n_bumps).astype(complex)

    def axes(self):
        return [self.lows[a] + (np.arange(self.shape[a]) + 0.5) * self.spacings[a]
                for a in range(self.ndim)]

    def _mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij", sparse=True)

    def values(self):
        mesh = self._mesh()
        out = np.zeros(self.shape, dtype=complex)
        for c, s, A in zip(self.centers, self.sigmas, self.amps):
            r2 = sum((mesh[a] - c[a]) ** 2 for a in range(self.ndim))
            out += A * np.exp(-r2 / (2.0 * s * s))
        return out

    def gradient(self):
        """Analytic partials, one array per axis."""
        mesh = self._mesh()
        grads = [np.zeros(self.shape, dtype=complex) for _ in range(self.ndim)]
        for c, s, A in zip(self.centers, self.sigmas, self.amps):
            r2 = sum((mesh[a] - c[a]) ** 2 for a in range(self.ndim))
            bump = A * np.exp(-r2 / (2.0 * s * s))
            for a in range(self.ndim):
                grads[a] += bump * (-(mesh[a] - c[a]) / (s * s))
        return grads


def mixture_corpus(ndim, count, seed, shape=None, half=2.0, n_bumps=3):
    rng = np.random.default_rng(seed)
    if shape is None:
        shape = (64,) * ndim if ndim == 1 else (48,) * ndim
    return [MixtureField(ndim, (-half,) * ndim, (half,) * ndim, shape, rng,
                         n_bumps=n_bumps) for _ in range(count)]


@pytest.fixture(scope="session")
def corpus_1d():
    return mixture_corpus(1, 100, seed=11, shape=(96,))


@pytest.fixture(scope="session")
def corpus_2d():
    return mixture_corpus(2, 100, seed=23, shape=(40, 40))
