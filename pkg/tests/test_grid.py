"""Grid construction, derived spacings, and guard rails."""

import numpy as np
import pytest

from vpfield import GridConfig, make_grid
from vpfield.errors import BadExtent, BudgetExceeded


def test_1d_spacings():
    g = make_grid(GridConfig(d=1, nx=(8,), nv=(8,), x_lo=(-1.0,), x_hi=(1.0,),
                             v_lo=(-1.0,), v_hi=(1.0,)))
    assert g.dx == (0.25,)
    assert g.dv == (0.25,)
    assert g.num_nodes == 64


def test_3d_node_count():
    g = make_grid(GridConfig(d=3, nx=(8, 8, 8), nv=(8, 8, 8),
                             x_lo=(-4.0,) * 3, x_hi=(4.0,) * 3,
                             v_lo=(-4.0,) * 3, v_hi=(4.0,) * 3))
    assert g.num_nodes == 262144
    assert g.dx == (1.0,) * 3
    assert g.dv == (1.0,) * 3
    assert g.cell_volume == 1.0


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        make_grid(GridConfig(d=3, nx=(4096,) * 3, nv=(4096,) * 3,
                             x_lo=(-4.0,) * 3, x_hi=(4.0,) * 3,
                             v_lo=(-4.0,) * 3, v_hi=(4.0,) * 3))


def test_bad_extent_guards():
    with pytest.raises(BadExtent):
        make_grid(GridConfig(d=1, nx=(8,), nv=(8,), x_lo=(1.0,), x_hi=(-1.0,),
                             v_lo=(-1.0,), v_hi=(1.0,)))
    with pytest.raises(BadExtent):
        make_grid(GridConfig(d=1, nx=(3,), nv=(8,), x_lo=(-1.0,), x_hi=(1.0,),
                             v_lo=(-1.0,), v_hi=(1.0,)))


def test_scalar_broadcast_and_node_centering():
    g = make_grid(GridConfig(d=2, nx=8, nv=4, x_lo=-2.0, x_hi=2.0,
                             v_lo=-1.0, v_hi=1.0))
    assert g.nx == (8, 8) and g.nv == (4, 4)
    ax = g.x_axis(0)
    assert ax[0] == pytest.approx(-2.0 + g.dx[0] / 2)
    assert ax[-1] == pytest.approx(2.0 - g.dx[0] / 2)
    # spacing identity holds to an ulp
    assert g.dx[0] == pytest.approx((2.0 - (-2.0)) / 8, rel=1e-15)


def test_node_coordinates_roundtrip():
    g = make_grid(GridConfig(d=1, nx=(6,), nv=(4,), x_lo=(-1.0,), x_hi=(1.0,),
                             v_lo=(-2.0,), v_hi=(2.0,)))
    pts = g.node_coordinates(np.arange(g.num_nodes))
    assert pts.shape == (24, 2)
    # first node is the (0, 0) corner cell center
    assert pts[0] == pytest.approx([-1.0 + g.dx[0] / 2, -2.0 + g.dv[0] / 2])
    # grids are hashable (used as cache keys)
    assert hash(g) == hash(g)
