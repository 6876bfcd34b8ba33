"""Characteristic flow maps: Verlet exactness, reversal, difference bounds."""

import math

import numpy as np
import pytest

from vpfield import GridConfig, make_grid
from vpfield.errors import NonFiniteForce
from vpfield.flow import (FlowMap, ForceSampler, flow_difference,
                          flow_difference_bound, integrate_flow,
                          jacobian_determinants)


def xgrid(n=12, half=3.0):
    return make_grid(GridConfig(d=3, nx=(n,) * 3, nv=(4,) * 3,
                                x_lo=(-half,) * 3, x_hi=(half,) * 3,
                                v_lo=(-1.0,) * 3, v_hi=(1.0,) * 3))


def linear_force_sampler(g, slope=-1.0):
    """F(x) = slope * x sampled on the grid; multilinear interp is exact."""
    mesh = np.meshgrid(*[g.x_axis(i) for i in range(3)], indexing="ij")
    F = slope * np.stack(mesh, axis=0)
    return ForceSampler.constant(g, F, 0.0)


def constant_force_sampler(g, vec):
    F = np.broadcast_to(np.asarray(vec)[:, None, None, None],
                        (3,) + g.xshape).copy()
    return ForceSampler.constant(g, F, 0.0)


def seeds_near_center(rng, m=40, scale=0.8):
    X = rng.uniform(-scale, scale, size=(m, 3))
    V = rng.uniform(-scale, scale, size=(m, 3))
    return np.concatenate([X, V], axis=1)


def test_identity_at_equal_times():
    g = xgrid()
    sampler = linear_force_sampler(g)
    seeds = seeds_near_center(np.random.default_rng(0))
    fmap = integrate_flow(sampler, 0.3, 0.3, seeds, substeps=4)
    assert np.array_equal(fmap.Z, seeds)


def test_free_streaming_exact():
    """Zero force: X = x + (s - t) v, V = v, exactly (Verlet is exact)."""
    g = xgrid()
    sampler = ForceSampler.constant(g, np.zeros((3,) + g.xshape), 0.0)
    rng = np.random.default_rng(1)
    seeds = seeds_near_center(rng)
    s, t = 0.0, 0.7
    fmap = integrate_flow(sampler, s, t, seeds, substeps=3)
    np.testing.assert_array_equal(fmap.V, seeds[:, 3:])
    np.testing.assert_allclose(fmap.X, seeds[:, :3] + (s - t) * seeds[:, 3:],
                               rtol=0, atol=1e-14)


def test_harmonic_oscillator_order():
    """F = -x: rotation in each (x_i, v_i) plane; phase error is O(dt^2)."""
    g = xgrid(n=16, half=4.0)
    sampler = linear_force_sampler(g, slope=-1.0)
    rng = np.random.default_rng(2)
    seeds = seeds_near_center(rng, m=20, scale=0.7)
    s, t = 0.9, 0.0
    cos, sin = math.cos(s), math.sin(s)
    X_exact = seeds[:, :3] * cos + seeds[:, 3:] * sin
    V_exact = -seeds[:, :3] * sin + seeds[:, 3:] * cos
    errs, dts = [], []
    for substeps in (8, 16, 32):
        fmap = integrate_flow(sampler, s, t, seeds, substeps=substeps)
        err = np.abs(fmap.X - X_exact).max() + np.abs(fmap.V - V_exact).max()
        errs.append(err)
        dts.append(s / substeps)
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert slope > 1.9, f"Verlet order {slope:.2f}"


def test_time_reversal():
    """Integrating t -> s -> t returns the seeds to 1e-10."""
    g = xgrid(n=16, half=4.0)
    sampler = linear_force_sampler(g, slope=-0.7)
    rng = np.random.default_rng(3)
    seeds = seeds_near_center(rng, m=30, scale=0.6)
    fwd = integrate_flow(sampler, 0.8, 0.0, seeds, substeps=16)
    back = integrate_flow(sampler, 0.0, 0.8, fwd.Z, substeps=16)
    assert np.abs(back.Z - seeds).max() <= 1e-10


def test_flow_difference_identical():
    g = xgrid()
    sampler = linear_force_sampler(g)
    seeds = seeds_near_center(np.random.default_rng(4))
    m1 = integrate_flow(sampler, 0.0, 0.5, seeds, substeps=4)
    m2 = integrate_flow(sampler, 0.0, 0.5, seeds, substeps=4)
    assert flow_difference(m1, m2) == 0.0


def test_flow_difference_constant_shift():
    """F vs F + delta: |dV| = |delta|(t-s), |dX| = |delta|(t-s)^2/2."""
    g = xgrid()
    delta = np.array([0.3, -0.2, 0.1])
    s0 = ForceSampler.constant(g, np.zeros((3,) + g.xshape), 0.0)
    s1 = constant_force_sampler(g, delta)
    seeds = seeds_near_center(np.random.default_rng(5), m=10, scale=0.3)
    s, t = 0.0, 0.6
    m0 = integrate_flow(s0, s, t, seeds, substeps=6)
    m1 = integrate_flow(s1, s, t, seeds, substeps=6)
    dnorm = np.linalg.norm(delta)
    expect = dnorm * (t - s) + dnorm * (t - s) ** 2 / 2
    assert flow_difference(m0, m1) == pytest.approx(expect, rel=1e-12)
    # the Gronwall envelope bounds it with margin; it dominates the
    # zero-gradient closed form |delta| (e^(t-s) - 1) because the sampled
    # field fades at the box faces, which adds a real Lipschitz constant
    bound = flow_difference_bound(s1, s0, s, t)
    assert flow_difference(m0, m1) <= bound
    assert bound >= dnorm * (math.exp(t - s) - 1.0) * (1 - 1e-12)


def random_smooth_sampler(g, rng, scale=0.5, time_dep=True):
    """Gaussian-bump force fields, optionally varying linearly in time."""
    def field():
        mesh = np.meshgrid(*[g.x_axis(i) for i in range(3)], indexing="ij")
        F = np.zeros((3,) + g.xshape)
        for _ in range(3):
            c = rng.uniform(-1.0, 1.0, size=3)
            s = rng.uniform(0.8, 1.5)
            amp = rng.uniform(-scale, scale, size=3)
            r2 = sum((mesh[i] - c[i]) ** 2 for i in range(3))
            bump = np.exp(-r2 / (2 * s * s))
            F += amp[:, None, None, None] * bump[None]
        return F
    if time_dep:
        return ForceSampler(g, [0.0, 1.0], [field(), field()])
    return ForceSampler.constant(g, field(), 0.0)


def test_flow_difference_bound_corpus():
    """Gronwall envelope holds for 20 random smooth force pairs."""
    g = xgrid(n=10, half=3.0)
    rng = np.random.default_rng(6)
    seeds = seeds_near_center(rng, m=60, scale=0.7)
    s, t = 0.0, 0.8
    for trial in range(20):
        s1 = random_smooth_sampler(g, rng)
        s2 = random_smooth_sampler(g, rng)
        m1 = integrate_flow(s1, s, t, seeds, substeps=24)
        m2 = integrate_flow(s2, s, t, seeds, substeps=24)
        measured = flow_difference(m1, m2)
        bound = flow_difference_bound(s1, s2, s, t)
        assert measured <= bound * (1 + 1e-9), \
            f"pair {trial}: measured {measured:.4e} > envelope {bound:.4e}"


def test_jacobian_determinant_near_one():
    """Verlet substeps are unit-Jacobian shears; probe drift <= 1e-3/time."""
    g = xgrid(n=16, half=4.0)
    rng = np.random.default_rng(7)
    sampler = random_smooth_sampler(g, rng, scale=0.4)
    seeds = seeds_near_center(rng, m=15, scale=0.5)
    t_span = 1.0
    dets = jacobian_determinants(sampler, t_span, 0.0, seeds, substeps=4,
                                 delta=1e-4)
    assert np.abs(dets - 1.0).max() <= 1e-3 * t_span, \
        f"max |det - 1| = {np.abs(dets - 1.0).max():.2e}"


def test_composition_consistency():
    """Z(s, t) vs Z(s, u) o Z(u, t) agree within integrator tolerance."""
    g = xgrid(n=12, half=3.5)
    sampler = linear_force_sampler(g, slope=-0.5)
    seeds = seeds_near_center(np.random.default_rng(8), m=20, scale=0.5)
    s, u, t = 0.0, 0.4, 0.8
    direct = integrate_flow(sampler, s, t, seeds, substeps=32)
    first = integrate_flow(sampler, u, t, seeds, substeps=16)
    second = integrate_flow(sampler, s, u, first.Z, substeps=16)
    gap = np.abs(second.Z - direct.Z).max()
    assert gap <= 1e-4, f"composition gap {gap:.2e}"


def test_non_finite_force_raises():
    g = xgrid(n=6)
    F = np.zeros((3,) + g.xshape)
    F[0, 2, 2, 2] = np.nan
    with pytest.raises(NonFiniteForce):
        ForceSampler.constant(g, F, 0.0)


def test_sampler_time_interpolation():
    g = xgrid(n=6)
    F0 = np.zeros((3,) + g.xshape)
    F1 = np.ones((3,) + g.xshape)
    sampler = ForceSampler(g, [0.0, 1.0], [F0, F1])
    mid = sampler.blended(0.25)
    assert np.all(mid == 0.25)
    # clamped outside the sampled range
    assert np.all(sampler.blended(-5.0) == 0.0)
    assert np.all(sampler.blended(5.0) == 1.0)
