import math
import warnings

import numpy as np
import pytest

from vantrees import bounds as B, families, prior as pri
from vantrees.errors import ContractViolation, DimensionError, InsufficientDataError
from vantrees.model import constant_statistic, identity_statistic, indicator_statistic


def test_conjugate_equality(gauss, gauss_prior):
    post = pri.posterior_mean(gauss, gauss_prior)
    rep = B.van_trees_1d(gauss, gauss_prior, B.identity_target(), post)
    risk = B.bayes_risk(gauss, gauss_prior, B.identity_target(), post).value
    assert rep.bound == pytest.approx(0.5, abs=1e-8)
    assert abs(risk - rep.bound) / rep.bound <= 1e-6
    assert rep.recompute() == pytest.approx(rep.bound, rel=1e-14)


def test_bump_prior_bound(gauss, bump):
    rep = B.van_trees_1d(gauss, bump, B.identity_target(), identity_statistic().clamped(10))
    assert rep.bound == pytest.approx(1 / 11, abs=1e-10)
    assert rep.residual_key_eq < 1e-9
    assert rep.diagnostics["bayes_risk"] >= rep.bound


def test_corollary_with_biased_estimator(gauss):
    q = pri.gaussian_prior(1.0, 1.0)
    rep = B.van_trees_corollary(gauss, q, B.identity_target(), constant_statistic(0.0))
    assert rep.bound == pytest.approx(1.5, abs=1e-8)
    assert rep.diagnostics["bayes_risk"] == pytest.approx(2.0, abs=1e-8)
    vt1 = B.van_trees_1d(gauss, q, B.identity_target())
    assert rep.bound >= vt1.bound


def test_cramer_rao(gauss):
    cr = B.cramer_rao(gauss, 0.0, identity_statistic())
    assert cr.bound == pytest.approx(1.0, abs=1e-9) and cr.variance == pytest.approx(1.0, abs=1e-9)
    cr = B.cramer_rao(gauss, 0.0, indicator_statistic())
    assert cr.bound == pytest.approx(1 / (2 * math.pi), abs=1e-10)
    assert cr.variance == pytest.approx(0.25, abs=1e-12)


def test_monte_carlo_risk_matches_quadrature(gauss, gauss_prior):
    post = pri.posterior_mean(gauss, gauss_prior)
    mc = B.bayes_risk(gauss, gauss_prior, B.identity_target(), post, "monte-carlo", seed=3, n_draws=5000)
    assert abs(mc.value - 0.5) < 4 * mc.se
    split = B.bayes_risk(gauss, gauss_prior, B.identity_target(), post, "monte-carlo", seed=3,
                         n_draws=5000, splits=4)
    assert abs(split.value - 0.5) < 4 * split.se
    with pytest.raises(InsufficientDataError):
        B.bayes_risk(gauss, gauss_prior, B.identity_target(), post, "monte-carlo", seed=1, n_draws=50)
    with pytest.raises(ValueError):
        B.bayes_risk(gauss, gauss_prior, B.identity_target(), post, "monte-carlo")


def test_matrix_bound_two_dimensional():
    m = families.gaussian_location_nd(2)
    q = pri.product_prior([pri.quartic_bump(nodes=24), pri.quartic_bump(nodes=24)])
    vm = B.van_trees_matrix(m, q, B.identity_target(2), identity_statistic(2))
    assert np.allclose(vm.schur_bound * 11, np.eye(2), atol=1e-8)
    assert vm.block_psd.min_eigenvalue >= -1e-7 and vm.gap_psd.passed
    assert np.allclose(vm.ridge_bound, vm.schur_bound, atol=1e-8)


def test_matrix_bound_reduces_to_scalar(gauss, bump):
    stat = identity_statistic().clamped(10)
    vm = B.van_trees_matrix(gauss, bump, B.identity_target(), stat)
    assert abs(vm.schur_bound[0, 0] - B.van_trees_1d(gauss, bump, B.identity_target(), stat).bound) <= 1e-12


def test_key_equality_and_delta_norm(gauss, bump):
    stat = indicator_statistic(0.2)
    res = B.key_equality_residual(gauss, bump, B.square_target(), stat)
    assert res <= 1e-9
    chk = B.delta_norm_identity_residual(gauss, bump)
    assert chk.residual <= 1e-8 and chk.cross_term <= 1e-9
    assert chk.lhs[0, 0] == pytest.approx(11.0, abs=1e-8)


def test_key_equality_requires_bounded_inputs(gauss, gauss_prior):
    with pytest.raises(ContractViolation):
        B.key_equality_sides(gauss, gauss_prior, B.identity_target(), identity_statistic())
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = B.key_equality_residual(gauss, gauss_prior, B.identity_target(), identity_statistic(), clamp=40)
    assert res < 1e-6


def test_ibp_zero(gauss, bump):
    psi = B.square_target()
    f = B.target_field(psi)
    g = B.prior_field(bump)
    assert B.ibp_zero_residual(f, g, bump.grid, 0) < 1e-10
    e = B.expectation_field(gauss, indicator_statistic())
    assert B.ibp_zero_residual(e, g, bump.grid, 0) < 1e-10


def test_delta_function_vanishes_off_support(gauss, bump):
    d = B.delta_function(gauss, bump, [[1.5], [0.2]])
    assert np.all(d[0] == 0) and np.any(d[1] != 0)


def test_target_gradient_check_and_scaling():
    psi = B.square_target()
    psi.check_gradient(np.array([[0.3], [-1.2]]))
    scaled = psi.scaled(3.0)
    t = np.array([[0.5]])
    assert scaled(t)[0, 0] == pytest.approx(0.75)
    with pytest.raises(DimensionError):
        B.van_trees_1d(families.gaussian_location_nd(2), pri.default_base_prior(2, 8), B.identity_target(2))


@pytest.mark.parametrize("a", [0.5, 2.0, -3.0])
def test_scale_equivariance(gauss, bump, a):
    base = B.van_trees_1d(gauss, bump, B.identity_target()).bound
    assert B.van_trees_1d(gauss, bump, B.identity_target().scaled(a)).bound == pytest.approx(a * a * base,
                                                                                            rel=1e-12)


def test_report_serialization(gauss, bump):
    rep = B.van_trees_1d(gauss, bump, B.identity_target())
    row = rep.to_csv_row()
    assert row["kind"] == "vt1" and "grid_meta.model.name" in row
    assert '"kind": "vt1"' in rep.to_json()
