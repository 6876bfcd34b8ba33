"""Characteristic tuple: gradients, densities, and the Lipschitz battery."""

import math

import numpy as np
import pytest

from vpfield import GaussianProfile, GridConfig, WaveField, lp_norm, make_grid, sample
from vpfield.chartuple import (characteristic_tuple, gradient, phase_density,
                               spatial_density)
from vpfield.fields import vector_magnitude
from vpfield.interaction import newtonian, zero_kernel
from vpfield.norms import a_norm_magnitude_values, a_norm_values, ball_constant
from conftest import grid_1d, grid_small3d


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------

def test_gradient_constant_interior():
    g = grid_1d(16)
    a = WaveField(g, np.full(g.shape, 2.0 + 1.0j))
    gx, gv = gradient(a, "all")
    # interior rows/cols are exactly zero; faces see the zero extension
    assert np.all(gx.values[1:-1, :] == 0)
    assert np.all(gv.values[:, 1:-1] == 0)


def test_gradient_linear_exact():
    g = grid_1d(16)
    mesh = g.phase_mesh()
    a = WaveField(g, (0.7 * np.asarray(mesh[1]) + 0 * mesh[0]).astype(complex))
    gv = gradient(a, "v")[0]
    np.testing.assert_allclose(gv.values[:, 1:-1], 0.7, rtol=1e-13)


def test_gradient_plane_wave_slope():
    """grad_v of g(x) e^{ikv} = ik alpha + O(h^2); Richardson slope ~ 2."""
    k = 1.3
    errs, hs = [], []
    for n in (32, 64, 128):
        g = grid_1d(n, half=3.0)
        a = sample(g, GaussianProfile(center_x=(0.0,), center_v=(0.0,),
                                      sigma_x=(0.7,), sigma_v=(0.7,),
                                      wave_k_v=(k,)))
        gv = gradient(a, "v")[0]
        # exact derivative: (ik - v/(2 sigma^2)) alpha
        mesh = g.phase_mesh()
        exact = (1j * k - np.asarray(mesh[1]) / (2 * 0.49)) * a.values
        interior = (slice(2, -2), slice(2, -2))
        errs.append(np.abs(gv.values[interior] - exact[interior]).max())
        hs.append(g.dv[0])
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope > 1.8, f"gradient slope {slope:.2f}"


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def test_spatial_density_zero():
    g = grid_1d(12)
    a = WaveField(g, np.zeros(g.shape, dtype=complex))
    assert np.all(spatial_density(a).values == 0)


def test_spatial_density_separable():
    """Separable alpha = g(x) h(v) with ||h||_2 = 1 gives rho = |g|^2."""
    g = grid_1d(n=64, half=3.2)
    sx, sv = 0.8, 0.5
    a = sample(g, GaussianProfile(center_x=(0.0,), center_v=(0.0,),
                                  sigma_x=(sx,), sigma_v=(sv,)))
    rho = spatial_density(a)
    x = g.x_axis(0)
    want = np.exp(-x ** 2 / (2 * sx * sx)) / math.sqrt(2 * math.pi * sx * sx)
    np.testing.assert_allclose(rho.values, want, rtol=1e-6, atol=1e-9)
    assert np.all(rho.values >= 0)


def test_density_mass_identity():
    g = grid_1d(24)
    rng = np.random.default_rng(3)
    a = WaveField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    rho = spatial_density(a)
    mass = float(rho.values.sum()) * g.x_cell_volume
    assert mass == pytest.approx(lp_norm(a, 2) ** 2, rel=1e-12)


def test_phase_density_real_field_vanishes():
    """Centered differences telescope: Re phi = 0 and phi = 0 for real alpha."""
    g = grid_1d(32)
    rng = np.random.default_rng(5)
    a = WaveField(g, rng.normal(size=g.shape).astype(complex))
    phi = phase_density(a)
    scale = max(lp_norm(a, 2) ** 2, 1e-30)
    assert np.abs(phi.values).max() <= 1e-12 * scale


def test_phase_density_plane_wave():
    """alpha = g e^{ikv}, real g: phi -> i k rho at 2nd order."""
    k = 0.9
    errs, hs = [], []
    for n in (32, 64, 128):
        g = grid_1d(n, half=3.0)
        a = sample(g, GaussianProfile(center_x=(0.0,), center_v=(0.0,),
                                      sigma_x=(0.7,), sigma_v=(0.7,),
                                      wave_k_v=(k,)))
        phi = phase_density(a)
        rho = spatial_density(a)
        errs.append(np.abs(phi.values[0] - 1j * k * rho.values).max())
        hs.append(g.dv[0])
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope > 1.8, f"phase-density slope {slope:.2f}"


def test_phase_density_scaling():
    g = grid_1d(16)
    rng = np.random.default_rng(7)
    a = WaveField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    c = 0.7 - 1.2j
    phi1 = phase_density(a)
    phi2 = phase_density(WaveField(g, c * a.values))
    np.testing.assert_allclose(phi2.values, (abs(c) ** 2) * phi1.values,
                               rtol=1e-12, atol=1e-15)


def test_real_phi_telescopes_pointwise():
    """Re phi <= 1e-10 max|phi| for complex alpha (exact summation by parts)."""
    g = grid_small3d(6)
    a = sample(g, GaussianProfile(sigma_x=(1.2,) * 3, sigma_v=(0.9,) * 3,
                                  wave_k_v=(0.6, -0.2, 0.3)))
    phi = phase_density(a)
    assert np.abs(phi.values.real).max() <= 1e-10 * np.abs(phi.values).max()


# ---------------------------------------------------------------------------
# assembled tuple
# ---------------------------------------------------------------------------

def test_tuple_zero_field():
    g = grid_small3d(6)
    a = WaveField(g, np.zeros(g.shape, dtype=complex))
    tup = characteristic_tuple(a, newtonian(3))
    for member in (tup.rho, tup.force, tup.phase_density, tup.phase_force):
        assert np.all(member.values == 0)


def test_tuple_zero_kernel():
    g = grid_small3d(6)
    a = sample(g, GaussianProfile(sigma_x=(1.2,) * 3, sigma_v=(0.9,) * 3,
                                  wave_k_v=(0.5, 0, 0)))
    tup = characteristic_tuple(a, zero_kernel(3))
    assert np.all(tup.force.values == 0)
    assert np.all(tup.phase_force.values == 0)
    assert tup.rho.values.max() > 0
    assert np.abs(tup.phase_density.values).max() > 0


def test_tuple_composition_identity():
    """Plane-wave-phase Gaussian: K -> i k . F by composing phi = i k rho
    (2nd order in h) with the linear convolution (exact, tested at the
    interaction level to 1e-10).  Verified as a refinement study."""
    k_vec = (0.8, -0.3, 0.5)
    errs, hs = [], []
    for n in (6, 12):
        g = grid_small3d(n, bx=3.6, bv=3.2)
        a = sample(g, GaussianProfile(sigma_x=(1.1,) * 3, sigma_v=(0.9,) * 3,
                                      wave_k_v=k_vec))
        tup = characteristic_tuple(a, newtonian(3))
        composed = np.einsum("c,cijk->ijk", 1j * np.asarray(k_vec),
                             tup.force.values)
        errs.append(np.abs(tup.phase_force.values - composed).max()
                    / np.abs(tup.phase_force.values).max())
        hs.append(g.dv[0])
    slope = math.log(errs[0] / errs[1]) / math.log(hs[0] / hs[1])
    assert slope > 1.7, f"composition identity slope {slope:.2f}, errs={errs}"


def test_re_k_small():
    g = grid_small3d(6)
    a = sample(g, GaussianProfile(sigma_x=(1.2,) * 3, sigma_v=(0.9,) * 3,
                                  wave_k_v=(0.5, 0.2, -0.4)))
    tup = characteristic_tuple(a, newtonian(3))
    kmax = np.abs(tup.phase_force.values).max()
    assert np.abs(tup.phase_force.values.real).max() <= 1e-12 * max(kmax, 1e-30)


def test_momentum_consistency():
    """No self-force: integral rho F dx ~ 0 by table antisymmetry."""
    g = grid_small3d(8)
    a = sample(g, GaussianProfile(center_x=(0.5, -0.3, 0.2), sigma_x=(1.0,) * 3,
                                  sigma_v=(0.9,) * 3))
    tup = characteristic_tuple(a, newtonian(3))
    mom = np.einsum("ijk,cijk->c", tup.rho.values, tup.force.values) * g.x_cell_volume
    budget = 1e-8 * lp_norm(tup.rho, 1) * vector_magnitude(tup.force).max()
    assert np.abs(mom).max() <= budget


# ---------------------------------------------------------------------------
# Lipschitz battery (acceptance criterion 5)
# ---------------------------------------------------------------------------

def _pair_1d(rng, n=48, half=2.8):
    g = grid_1d(n, half=half)
    def one():
        prof = GaussianProfile(
            center_x=(rng.uniform(-0.8, 0.8),), center_v=(rng.uniform(-0.8, 0.8),),
            sigma_x=(rng.uniform(0.5, 0.9),), sigma_v=(rng.uniform(0.5, 0.9),),
            wave_k_v=(rng.uniform(-1, 1),), wave_k_x=(rng.uniform(-1, 1),),
            amplitude=rng.uniform(0.5, 1.2) * np.exp(2j * math.pi * rng.uniform()))
        return sample(g, prof)
    return g, one(), one()


def lipschitz_strict_items(g, a1, a2, kappa, radius_set):
    """Items (i), (ii), (iv), (v): strict inequalities with A(kappa, d)."""
    d = g.d
    spac = g.spacings
    A_kd = ball_constant(kappa, d).value
    rho1, rho2 = spatial_density(a1), spatial_density(a2)
    phi1, phi2 = phase_density(a1), phase_density(a2)
    na1, _, _ = a_norm_values(a1.values, spac, kappa, 2.0, radius_set)
    na2, _, _ = a_norm_values(a2.values, spac, kappa, 2.0, radius_set)
    ndiff, _, _ = a_norm_values(a1.values - a2.values, spac, kappa, 2.0, radius_set)
    gv1 = [w.values for w in gradient(a1, "v")]
    gv2 = [w.values for w in gradient(a2, "v")]
    ng1, _, _ = a_norm_magnitude_values(gv1, spac, kappa, 2.0, radius_set)
    ng2, _, _ = a_norm_magnitude_values(gv2, spac, kappa, 2.0, radius_set)

    w_x = g.x_cell_volume
    checks = {}
    checks["i:rho_inf"] = (
        float(np.abs(rho1.values - rho2.values).max()),
        A_kd * (na1 + na2) * ndiff)
    checks["ii:rho_l1"] = (
        float(np.abs(rho1.values - rho2.values).sum() * w_x),
        (na1 + na2) * ndiff)
    dphi = vector_magnitude(type(phi1)(g, phi1.values - phi2.values))
    checks["iv:phi_inf"] = (float(dphi.max()), A_kd * (ng1 + ng2) * ndiff)
    checks["v:phi_l1"] = (float(dphi.sum() * w_x), (ng1 + ng2) * ndiff)
    return checks


def test_lipschitz_strict_battery_1d():
    """50 random pairs in d = 1: items (i), (ii), (iv), (v) hold strictly."""
    rng = np.random.default_rng(101)
    kappa = 2.0
    for trial in range(50):
        g, a1, a2 = _pair_1d(rng)
        rs = (0.0, g.cell_diagonal, 2 * g.cell_diagonal, 4 * g.cell_diagonal)
        checks = lipschitz_strict_items(g, a1, a2, kappa, rs)
        for name, (lhs, rhs) in checks.items():
            assert lhs <= rhs * (1 + 1e-10), \
                f"pair {trial}, item {name}: {lhs:.4e} > {rhs:.4e}"


def test_lipschitz_ratio_battery_3d():
    """Items (iii), (vi): F and K differences as bounded-ratio monitors."""
    rng = np.random.default_rng(202)
    g = grid_small3d(6, bx=3.0, bv=3.0)
    kappa = 6.0
    kern = newtonian(3)
    rs = (0.0, g.cell_diagonal)
    d = g.d
    A_kd = ball_constant(kappa, d).value
    ratios_f, ratios_k = [], []
    for _ in range(12):
        def one():
            prof = GaussianProfile(
                center_x=tuple(rng.uniform(-0.5, 0.5, 3)),
                center_v=tuple(rng.uniform(-0.5, 0.5, 3)),
                sigma_x=tuple(rng.uniform(0.7, 1.1, 3)),
                sigma_v=tuple(rng.uniform(0.7, 1.1, 3)),
                wave_k_v=tuple(rng.uniform(-0.7, 0.7, 3)),
                amplitude=rng.uniform(0.5, 1.2) * np.exp(2j * math.pi * rng.uniform()))
            return sample(g, prof)
        a1, a2 = one(), one()
        t1 = characteristic_tuple(a1, kern)
        t2 = characteristic_tuple(a2, kern)
        spac = g.spacings
        na1, _, _ = a_norm_values(a1.values, spac, kappa, 2.0, rs)
        na2, _, _ = a_norm_values(a2.values, spac, kappa, 2.0, rs)
        ndiff, _, _ = a_norm_values(a1.values - a2.values, spac, kappa, 2.0, rs)
        gv1 = [w.values for w in gradient(a1, "v")]
        gv2 = [w.values for w in gradient(a2, "v")]
        ng1, _, _ = a_norm_magnitude_values(gv1, spac, kappa, 2.0, rs)
        ng2, _, _ = a_norm_magnitude_values(gv2, spac, kappa, 2.0, rs)
        base = A_kd ** (1 - 1 / d)
        dF = float(vector_magnitude(
            type(t1.force)(g, t1.force.values - t2.force.values)).max())
        dK = float(np.abs(t1.phase_force.values - t2.phase_force.values).max())
        ratios_f.append(dF / (base * (na1 + na2) * ndiff))
        ratios_k.append(dK / (base * (ng1 + ng2) * ndiff))
    for name, ratios in (("F", ratios_f), ("K", ratios_k)):
        spread = max(ratios) / min(ratios)
        assert spread <= 10.0, f"{name} ratio spread {spread:.2f}"
