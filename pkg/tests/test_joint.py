import pytest

from vantrees import bounds as B, families, joint as J, prior as pri
from vantrees.errors import DimensionError, DomainError
from vantrees.model import constant_statistic, identity_statistic, indicator_statistic


@pytest.fixture(scope="module")
def joint_bump(gauss, bump):
    return J.build_joint(gauss, bump, 1.0)


def test_normalization(joint_bump):
    for a in (-0.9, 0.0, 0.7):
        assert joint_bump.mass(a) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DomainError):
        joint_bump.mass(1.0)


def test_fisher_gamma_and_bound_identification(joint_bump):
    rec = J.van_trees_as_cramer_rao(joint_bump, identity_statistic().clamped(10), B.identity_target())
    assert rec.fisher_fd == pytest.approx(11.0, abs=1e-5)
    assert rec.fisher_delta == pytest.approx(rec.information, abs=1e-8)
    assert rec.dgamma_fd == pytest.approx(rec.int_psi_prime_dQ, abs=1e-5)
    assert rec.gap <= 1e-5
    assert rec.second_moment >= rec.corollary_bound


def test_delta_is_the_joint_derivative(joint_bump):
    fit = J.verify_delta_is_joint_derivative(joint_bump)
    assert fit.certified


def test_gaussian_prior_with_biased_estimator(gauss):
    jm = J.build_joint(gauss, pri.gaussian_prior(1.0, 1.0))
    rec = J.van_trees_as_cramer_rao(jm, constant_statistic(0.0), B.clamped_identity(1, 20.0))
    assert rec.corollary_bound == pytest.approx(1.5, abs=1e-6)
    assert rec.second_moment == pytest.approx(2.0, abs=1e-6)
    assert rec.gap <= 1e-5


def test_margin_is_enforced_on_bounded_parameter_sets():
    bern = families.bernoulli()
    q = pri.quartic_bump(0.5, 0.1)
    assert J.build_joint(bern, q).delta == pytest.approx(0.2)
    J.build_joint(bern, q, 0.3)
    with pytest.raises(DomainError, match="offending"):
        J.build_joint(bern, q, 0.5)


def test_gamma_J_cross_check(joint_bump):
    val = J.gamma_J(joint_bump, 0.2, indicator_statistic(), B.identity_target())
    assert abs(val) < 1.0


def test_rejects_multivariate():
    with pytest.raises(DimensionError):
        J.build_joint(families.gaussian_location_nd(2), pri.default_base_prior(2, 8))
