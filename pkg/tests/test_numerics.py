import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vantrees.errors import DimensionError, InsufficientDataError
from vantrees.numerics import (Grid1D, GridP, eigendecompose_sym, fit_rate, integrate, make_rng,
                               pinv_sym, pooled_mean, psd_check, split_seeds)


def test_gauss_legendre_integrates_polynomials_exactly():
    g = Grid1D.gauss_legendre(-1.0, 2.0, 6)
    # degree 11 is the highest exact degree for 6 nodes
    x = g.nodes
    assert integrate(x**11, g) == pytest.approx((2**12 - 1) / 12, rel=1e-13)


def test_composite_panels_put_kinks_on_breaks():
    g = Grid1D.panels(-1.5, 1.5, 0.5, 8)
    assert integrate(np.abs(g.nodes), g) == pytest.approx(2.25, abs=1e-14)
    assert 0.0 in set(g.meta.values()) or g.meta["panels"] == 6


def test_trapezoid_and_atoms():
    g = Grid1D.trapezoid(0.0, 1.0, 101)
    assert integrate(g.nodes, g) == pytest.approx(0.5, abs=1e-15)
    a = Grid1D.atoms([0.0, 1.0])
    assert integrate(np.array([0.3, 0.7]), a) == pytest.approx(1.0)


@pytest.mark.parametrize("nodes,weights", [([0.0, 0.0], [1.0, 1.0]), ([0.0, 1.0], [1.0, -1.0])])
def test_grid_rejects_bad_rules(nodes, weights):
    with pytest.raises(ValueError):
        Grid1D(np.array(nodes), np.array(weights), "gauss-legendre")


def test_tensor_grid_accepts_flat_and_shaped_values():
    g = GridP([Grid1D.gauss_legendre(0, 1, 4), Grid1D.gauss_legendre(0, 2, 5)])
    pts = g.points
    flat = pts[:, 0] * pts[:, 1]
    assert integrate(flat, g) == pytest.approx(1.0, rel=1e-13)
    assert integrate(flat.reshape(g.shape), g) == pytest.approx(1.0, rel=1e-13)
    with pytest.raises(DimensionError):
        integrate(np.ones(7), g)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=12), st.floats(-3, 3), st.floats(-3, 3))
def test_integration_is_linear(vals, a, b):
    g = Grid1D.gauss_legendre(0.0, 1.0, len(vals))
    f = np.asarray(vals)
    h = np.cos(g.nodes)
    assert integrate(a * f + b * h, g) == pytest.approx(a * integrate(f, g) + b * integrate(h, g), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_eigendecomposition_reconstructs(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    m = a + a.T
    lam, u = eigendecompose_sym(m)
    assert np.all(np.diff(lam) <= 0)
    assert np.allclose(u @ np.diag(lam) @ u.T, m, atol=1e-12 * max(1, np.abs(m).max()))
    assert psd_check(a @ a.T, 1e-12).passed


def test_psd_check_and_pinv():
    assert not psd_check(np.diag([1.0, -1e-3]), 1e-7).passed
    inv, cut = pinv_sym(np.diag([2.0, 0.0]))
    assert cut and np.allclose(inv, np.diag([0.5, 0.0]))
    inv, cut = pinv_sym(np.diag([2.0, 4.0]))
    assert not cut and np.allclose(inv, np.diag([0.5, 0.25]))


def test_rate_fit_recovers_slope_and_needs_three_points():
    pairs = [(h, 3 * h**2) for h in (0.1, 0.05, 0.025, 0.0125)]
    fit = fit_rate(pairs, threshold=1.9)
    assert fit.slope == pytest.approx(2.0, abs=1e-12) and fit.certified
    assert fit_rate([(1, 0.0), (0.5, 0.0), (0.25, 0.0)], 1e-15, 1.0).slope == math.inf
    with pytest.raises(InsufficientDataError):
        fit_rate(pairs[:2])


def test_rng_contract():
    assert make_rng(5).normal() == make_rng(5).normal()
    with pytest.raises(ValueError):
        make_rng(2**64)
    with pytest.raises(TypeError):
        make_rng(1.5)
    assert split_seeds(9, 3) == split_seeds(9, 3)
    assert len(set(split_seeds(9, 3))) == 3


def test_pooled_mean():
    m, se = pooled_mean([1.0, 3.0], [0.2, 0.2], [100, 100])
    assert m == 2.0 and se == pytest.approx(0.2 / math.sqrt(2))
