import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radgas.errors import GridError, GridMismatch
from radgas.grid import (BoundaryTrace, Grid, ScalarField, ddx, ddy, integrate2d, laplacian,
                         make_grid)


def test_make_grid_spacings():
    g = make_grid(8, 4, 1.0, 1.0)
    assert (g.dx, g.dy) == (0.125, 0.25)
    g = make_grid(100, 64, 50.0, 16.0)
    assert (g.dx, g.dy) == (0.5, 0.25)
    assert g.shape == (101, 64)
    assert g.x[-1] == 50.0


@pytest.mark.parametrize("args", [(4, 4, 1.0, 1.0), (8, 2, 1.0, 1.0), (8, 4, 0.0, 1.0), (8, 4, 1.0, -1.0)])
def test_make_grid_rejects(args):
    with pytest.raises(GridError):
        make_grid(*args)


def test_field_validation():
    g = make_grid(8, 4, 1.0, 1.0)
    with pytest.raises(GridMismatch):
        ScalarField(g, np.zeros((8, 4)))
    with pytest.raises(GridError):
        ScalarField(g, np.full(g.shape, np.nan))
    with pytest.raises(GridMismatch):
        g.zeros() + make_grid(8, 8, 1.0, 1.0).zeros()


def test_ddx_examples():
    g = make_grid(64, 8, 3.0, 1.0)
    assert np.allclose(ddx(g.field(lambda x, y: x)).values, 1.0, atol=1e-12)
    assert np.abs(ddx(g.field(lambda x, y: 3.0 + 0 * x)).values).max() == 0.0
    g = make_grid(300, 4, 3.0, 1.0)
    err = np.abs(ddx(g.field(lambda x, y: np.sin(x))).values - np.cos(g.mesh()[0])).max()
    assert err <= 5 * g.dx**2


def test_ddy_examples():
    g = make_grid(8, 64, 1.0, 2 * np.pi)
    k = 2 * np.pi / g.ly
    err = np.abs(ddy(g.field(lambda x, y: np.sin(k * y))).values - k * np.cos(k * g.mesh()[1])).max()
    assert err <= 5 * g.dy**2
    assert np.abs(ddy(g.field(lambda x, y: np.exp(x) + 0 * y)).values).max() == 0.0
    assert np.abs(ddy(g.field(lambda x, y: x + 0 * y)).values).max() == 0.0


def test_laplacian_examples():
    g = make_grid(32, 8, 2.0, 1.0)
    lap = laplacian(g.field(lambda x, y: x**2 + 0 * y)).values
    assert np.allclose(lap[1:-1], 2.0, atol=1e-10)
    assert np.abs(laplacian(g.field(lambda x, y: 1.5 + 0 * x)).values).max() < 1e-12
    errs = []
    for n in (32, 64, 128):
        g = make_grid(n, n, 2 * np.pi, 2 * np.pi)
        f = g.field(lambda x, y: np.cos(x) * np.cos(y))
        errs.append(np.abs(laplacian(f).values + 2 * f.values)[1:-1].max())
    assert 3.5 <= errs[0] / errs[1] <= 4.5 and 3.5 <= errs[1] / errs[2] <= 4.5


def test_integrate2d_examples():
    g = make_grid(16, 8, 2.0, 3.0)
    assert integrate2d(g.field(lambda x, y: 1 + 0 * x)) == pytest.approx(6.0, rel=1e-14)
    assert integrate2d(g.zeros(), 1.5) == 0.0
    g = make_grid(4000, 4, 20.0, 1.0)
    assert integrate2d(g.field(lambda x, y: np.exp(-2 * x) + 0 * y)) == pytest.approx(0.5, abs=1e-5)
    with pytest.raises(ValueError):
        integrate2d(g.zeros(), -1.0)


def test_boundary_trace():
    g = make_grid(8, 4, 1.0, 1.0)
    f = g.field(lambda x, y: 2 + np.sin(y) + x)
    assert np.array_equal(BoundaryTrace.of(f).values, f.values[0])


def test_second_order_refinement():
    errs = []
    for n in (32, 64, 128):
        g = make_grid(n, n, 2.0, 2.0)
        f = g.field(lambda x, y: np.sin(x) * np.cos(np.pi * y))
        X, Y = g.mesh()
        errs.append(np.abs(ddx(f).values - np.cos(X) * np.cos(np.pi * Y)).max()
                    + np.abs(ddy(f).values + np.pi * np.sin(X) * np.sin(np.pi * Y)).max())
    for a, b in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5


fields = st.lists(st.floats(-10, 10), min_size=6, max_size=6)


@settings(max_examples=50, deadline=None)
@given(fields)
def test_affine_exactness_and_commutativity(c):
    g = make_grid(12, 8, 1.5, 2.0)
    a, b, cc = c[:3]
    f = g.field(lambda x, y: a + b * x + 0 * y)
    assert np.allclose(ddx(f).values, b, atol=1e-10)
    rng = np.random.default_rng(abs(int(sum(c) * 1e3)))
    h = ScalarField(g, rng.normal(size=g.shape))
    xy = ddx(ddy(h)).values
    yx = ddy(ddx(h)).values
    assert np.allclose(xy, yx, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 3))
def test_integral_positive_and_monotone(seed, alpha):
    g = make_grid(10, 6, 2.0, 1.0)
    rng = np.random.default_rng(seed)
    f = np.abs(rng.normal(size=g.shape))
    h = f + np.abs(rng.normal(size=g.shape))
    assert integrate2d(ScalarField(g, f), alpha) >= 0
    assert integrate2d(ScalarField(g, h), alpha) >= integrate2d(ScalarField(g, f), alpha)
