import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vantrees import prior as pri
from vantrees.errors import DimensionError, DomainError, ModelDefinitionError
from vantrees.model import ParamDomain


@pytest.mark.parametrize("build,expected", [
    (lambda: pri.raised_cosine(), math.pi**2),
    (lambda: pri.quartic_bump(), 10.0),
    (lambda: pri.gaussian_prior(0.0, 0.5), 4.0),
    (lambda: pri.gaussian_prior(2.0, 3.0), 1 / 9),
])
def test_prior_information_oracles(build, expected):
    q = build()
    assert pri.prior_information(q)[0, 0] == pytest.approx(expected, abs=1e-8)
    assert pri.prior_mass(q) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("r", [2.0, 1.0, 0.5, 0.1])
def test_scaling_law(r):
    base = pri.raised_cosine()
    scaled = pri.scaled_prior(base, [0.3], r)
    assert pri.prior_information(scaled)[0, 0] == pytest.approx(math.pi**2 / r**2, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(-50, 50))
def test_translation_invariance(shift):
    base = pri.quartic_bump()
    moved = pri.quartic_bump(center=shift)
    assert pri.prior_information(moved)[0, 0] == pytest.approx(pri.prior_information(base)[0, 0], rel=1e-10)


def test_product_prior_information_is_diagonal():
    q = pri.product_prior([pri.quartic_bump(), pri.raised_cosine(half_width=2.0)])
    info = pri.prior_information(q)
    assert np.allclose(info, np.diag([10.0, math.pi**2 / 4]), atol=1e-8)
    assert np.all(np.linalg.eigvalsh(info) > 0)


def test_default_base_prior_scales_with_dimension():
    for p in (1, 2):
        q = pri.default_base_prior(p, 24)
        assert np.allclose(pri.prior_information(q), 10 * p * np.eye(p), atol=1e-8)


def test_boundary_vanish_check():
    assert pri.boundary_vanish_check(pri.quartic_bump()).passed
    bad = pri.boundary_vanish_check(pri.uniform_prior(-1.0, 1.0))
    assert not bad.passed and len(bad.failures) == 2


def test_tabulated_prior_round_trip():
    t = np.linspace(-1, 1, 401)
    q = 15 / 16 * (1 - t**2) ** 2
    tab = pri.tabulated_prior(t, q)
    assert pri.prior_information(tab)[0, 0] == pytest.approx(10.0, rel=2e-3)
    with pytest.raises(ModelDefinitionError):
        pri.tabulated_prior(t, 2 * q)


def test_scaled_prior_must_stay_inside_domain():
    with pytest.raises(DomainError):
        pri.scaled_prior(pri.quartic_bump(), [0.0], 2.0, ParamDomain.box([-1.0], [1.0]))
    with pytest.raises(DimensionError):
        pri.scaled_prior(pri.quartic_bump(), [0.0, 1.0], 1.0)


def test_posterior_mean_gaussian_conjugate(gauss, gauss_prior):
    stat = pri.posterior_mean(gauss, gauss_prior)
    x = np.array([-1.0, 0.0, 2.0])
    assert np.allclose(stat(x)[:, 0], x / 2, atol=1e-10)
