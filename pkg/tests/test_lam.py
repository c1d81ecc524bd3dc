import numpy as np
import pytest

from vantrees import bounds as B, families, lam as L, prior as pri
from vantrees.errors import ConfigError, DomainError, MisuseError
from vantrees.model import sample_mean


@pytest.fixture(scope="module")
def inst(gauss):
    return L.LamInstance(gauss, 0.0, c_grid=(1.0, 2.0, 5.0), n_grid=(2_500, 10_000))


def test_gamma_is_exact_for_gaussian_location(inst):
    ih = inst.I_H[0, 0]
    assert ih == pytest.approx(10.0, abs=1e-8)
    for c, n in inst.cells():
        rec = L.gamma_matrix(inst, c, n)
        assert rec.Gamma[0, 0] == pytest.approx(1 / (1 + ih / c**2), abs=1e-8)
        assert np.allclose(rec.recompute(), rec.Gamma, atol=1e-14)


def test_shrunk_prior_information(inst):
    q = inst.shrunk_prior(2.0, 10_000)
    assert pri.prior_information(q)[0, 0] == pytest.approx(10.0 * 10_000 / 4.0, rel=1e-6)


def test_cells_enforce_n_over_c_squared(gauss):
    assert L.LamInstance(gauss, 0.0, c_grid=(1.0, 5.0), n_grid=(200,)).cells() == [(1.0, 200)]
    with pytest.raises(ConfigError):
        L.LamInstance(gauss, 0.0, c_grid=(5.0,), n_grid=(100,))


def test_shrunk_prior_refuses_small_n(gauss):
    tight = L.LamInstance(gauss, 0.0, radius=0.01, c_grid=(1.0,), n_grid=(100,))
    with pytest.raises(DomainError, match="not large enough"):
        tight.shrunk_prior(1.0, 100)


def test_limits():
    assert L.limit_bound(L.LamInstance(families.gaussian_location(), 0.0, c_grid=(1.0,), n_grid=(100,))) == \
        pytest.approx(1.0, abs=1e-8)
    bern = L.LamInstance(families.bernoulli(), 0.5, radius=0.4, c_grid=(1.0,), n_grid=(100,))
    assert L.limit_bound(bern) == pytest.approx(0.25, abs=1e-8)
    g2 = L.LamInstance(families.gaussian_location_nd(2), [0.0, 0.0], c_grid=(1.0,), n_grid=(100,))
    assert L.limit_bound(g2) == pytest.approx(2.0, abs=1e-8)


def test_bounds_increase_with_c(inst):
    table = L.lam_bound(inst)
    by_c = {}
    for r in table.rows:
        by_c.setdefault(r["n"], []).append(r["bound_finite"])
    for vals in by_c.values():
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert all(v <= table.limit + 1e-12 for v in vals)


def test_gaussian_quadratic_integral():
    q = L.QuadraticForm([[2.0, 0.5], [0.5, 1.0]])
    gam = np.array([[1.0, 0.3], [0.3, 0.5]])
    exact = L.gaussian_quadratic_integral(q, gam)
    assert exact == pytest.approx(2.0 + 0.3 + 0.5, abs=1e-14)
    mc, se = L.gaussian_quadratic_integral_mc(q, gam, 11, 50_000)
    assert abs(mc - exact) < 4 * se


def test_local_minimax_risk_common_random_numbers(gauss):
    inst = L.LamInstance(gauss, 0.0, c_grid=(1.0,), n_grid=(200,))
    a = L.local_minimax_risk(inst, 1.0, 200, sample_mean(1), 5, 2_000, G=2)
    b = L.local_minimax_risk(inst, 1.0, 200, sample_mean(1), 5, 2_000, G=2)
    assert a.sup == b.sup and len(a.thetas) == 5
    assert abs(a.sup - 1.0) < 4 * a.se


def test_singular_probe():
    inst = L.LamInstance(families.first_coordinate_gaussian(), [0.0, 0.0], c_grid=(5.0,), n_grid=(10_000,))
    tab = L.singular_probe(inst, [0.0, 1.0], c_values=(5.0, 10.0))
    assert 3.6 <= tab.ratios()[0] <= 4.4
    with pytest.raises(MisuseError):
        L.singular_probe(inst, [1.0, 0.0])


def test_loss_must_match_target(gauss):
    with pytest.raises(Exception):
        L.LamInstance(gauss, 0.0, psi=B.identity_target(), loss=L.QuadraticForm(np.eye(2)))
