import itertools
import math

import numpy as np
import pytest

from vantrees import families
from vantrees.errors import ContractViolation, DimensionError, DomainError, StepError
from vantrees.model import (dqm_certify, fisher_information, gamma_derivative, identity_statistic,
                            indicator_statistic, l2_partial_derivative, normalization_error,
                            product_model, score_orthogonality)


@pytest.mark.parametrize("name,theta,expected", [
    ("gaussian_location", 0.3, 1.0),
    ("bernoulli", 0.5, 4.0),
    ("bernoulli", 0.2, 6.25),
    ("exponential_rate", 2.0, 0.25),
])
def test_fisher_oracles(name, theta, expected):
    m = families.FAMILIES[name]()
    assert fisher_information(m, theta)[0, 0] == pytest.approx(expected, abs=1e-8)
    assert normalization_error(m, theta) < 1e-10


def test_fisher_two_dimensional_gaussian_is_identity():
    m = families.gaussian_location_nd(2)
    assert np.allclose(fisher_information(m, [0.2, -0.4]), np.eye(2), atol=1e-8)


def test_mean_logvar_fisher():
    m = families.gaussian_mean_logvar()
    # theta = (mean, log variance): diag(exp(-v), 1/2)
    fi = fisher_information(m, [0.0, math.log(2.0)])
    assert np.allclose(fi, np.diag([0.5, 0.5]), atol=1e-8)


@pytest.mark.parametrize("name,theta", [("gaussian_location", 0.0), ("bernoulli", 0.3),
                                        ("exponential_rate", 1.5), ("triangular_location", 0.1)])
def test_score_orthogonality(name, theta):
    m = families.FAMILIES[name]()
    assert np.max(np.abs(score_orthogonality(m, theta))) <= 1e-9


@pytest.mark.parametrize("name,theta,threshold", [("gaussian_location", 0.0, 1.9), ("bernoulli", 0.4, 1.9),
                                                  ("exponential_rate", 2.0, 1.9),
                                                  ("triangular_location", 0.0, 1.3)])
def test_dqm_slopes(name, theta, threshold):
    fit = dqm_certify(families.FAMILIES[name](), theta, 0)
    assert fit.slope >= threshold and fit.certified


def test_triangular_fisher_converges_to_twelve():
    # sqrt-density derivative is +-sqrt(3/2) on (-1, 1): 4 * 2 * 3/2 = 12
    fi = fisher_information(families.triangular_location(), 0.0)[0, 0]
    assert fi == pytest.approx(12.0, abs=2e-3)


def test_analytic_derivative_matches_finite_difference(gauss):
    comp = l2_partial_derivative(gauss, 0.4, 0)
    assert comp.provenance == "analytic" and comp.fd_distance < 1e-7


def test_gamma_derivative_matches_closed_form(gauss):
    # d/dtheta P_theta(X > 0) = phi(theta)
    val = gamma_derivative(gauss, 0.0, indicator_statistic(0.0), 0)
    assert val == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-10)
    with pytest.raises(ContractViolation):
        gamma_derivative(gauss, 0.0, identity_statistic(), 0)


def test_bernoulli_product_brute_force():
    base = families.bernoulli()
    theta = 0.3
    p1 = 1 / (theta * (1 - theta))
    for n in (2, 3):
        prod = product_model(base, n)
        # enumerate every outcome by hand: score of x is sum_k (x_k - theta) / (theta (1 - theta))
        brute = 0.0
        for xs in itertools.product((0, 1), repeat=n):
            prob = math.prod(theta if x else 1 - theta for x in xs)
            score = sum((x - theta) * p1 for x in xs)
            brute += prob * score**2
        assert brute == pytest.approx(n * p1, rel=1e-12)
        assert fisher_information(prod, theta)[0, 0] == pytest.approx(n * p1, rel=1e-8)


def test_domain_and_dimension_errors(gauss):
    with pytest.raises(DimensionError):
        families.gaussian_location_nd(2).f([0.0, 1.0, 2.0])
    with pytest.raises(DomainError):
        families.bernoulli().f(1.5)
    with pytest.raises(StepError):
        l2_partial_derivative(families.bernoulli(), 0.99995, 0, h=1e-3)


def test_constant_family_has_zero_information():
    assert fisher_information(families.constant_family(), 0.0)[0, 0] == 0.0
