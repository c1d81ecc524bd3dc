"""Built-in parametric families.

Each constructor returns a :class:`~vantrees.model.Model` whose sample grid
covers the requested ``theta_range``; asking for a parameter outside that
range raises :class:`~vantrees.errors.DomainError`.

Continuous sample spaces use composite Gauss-Legendre panels whose edges
sit on a lattice containing 0, so that indicator statistics such as
``1{x > 0}`` are integrated without discretization error.
"""

from __future__ import annotations

import math

import numpy as np

from .model import Model, ParamDomain
from .numerics import GAUSS_TAIL, TAIL_LEVEL, Grid1D, GridP

SQRT_2PI = math.sqrt(2.0 * math.pi)
JUMP_TOL = 1e-12


def _range(theta_range, p):
    arr = np.asarray(theta_range, dtype=float).reshape(p, 2)
    return arr[:, 0], arr[:, 1]


def _phi(u, sigma=1.0):
    return np.exp(-0.5 * (u / sigma) ** 2) / (SQRT_2PI * sigma)


def gaussian_location(sigma: float = 1.0, theta_range=(-10.0, 10.0), panel: float = 0.5,
                      order: int = 12) -> Model:
    """``N(theta, sigma^2)`` with known ``sigma``; Fisher information ``1 / sigma^2``."""
    lo, hi = _range(theta_range, 1)
    half = GAUSS_TAIL * sigma
    grid = Grid1D.panels(lo[0] - half, hi[0] + half, panel * sigma, order)

    def density(t, x):
        return _phi(x[None, :, 0] - t[:, :1], sigma)

    def score(t, x):
        return ((x[None, :, 0] - t[:, :1]) / sigma**2)[..., None]

    def sampler(t, rng, size):
        return t[0] + sigma * rng.standard_normal((size, 1))

    return Model(density, grid, ParamDomain.real_space(1), score=score, sampler=sampler,
                 coverage=ParamDomain.box(lo, hi), name="gaussian_location",
                 params={"sigma": sigma, "theta_range": [lo[0], hi[0]]})


def gaussian_location_nd(p: int = 2, theta_range=None, panel: float = 2.0, order: int = 12) -> Model:
    """``N(theta, I_p)`` on ``R^p``; Fisher information is the identity."""
    if theta_range is None:
        theta_range = [(-2.0, 2.0)] * p
    lo, hi = _range(theta_range, p)
    axes = [Grid1D.panels(lo[i] - GAUSS_TAIL, hi[i] + GAUSS_TAIL, panel, order) for i in range(p)]
    grid = GridP(axes)

    def density(t, x):
        u = x[None, :, :] - t[:, None, :]
        return np.exp(-0.5 * np.sum(u * u, axis=-1)) / SQRT_2PI**p

    def score(t, x):
        return x[None, :, :] - t[:, None, :]

    def sampler(t, rng, size):
        return t + rng.standard_normal((size, p))

    return Model(density, grid, ParamDomain.real_space(p), score=score, sampler=sampler,
                 coverage=ParamDomain.box(lo, hi), name=f"gaussian_location_{p}d",
                 params={"theta_range": np.stack([lo, hi], 1).tolist()})


def gaussian_mean_logvar(theta_range=((-3.0, 3.0), (-1.0, 1.0)), panel: float = 0.25,
                         order: int = 12) -> Model:
    """``N(m, exp(v))`` with ``theta = (m, v)``; Fisher information ``diag(exp(-v), 1/2)``."""
    lo, hi = _range(theta_range, 2)
    smax = math.exp(0.5 * hi[1])
    grid = Grid1D.panels(lo[0] - GAUSS_TAIL * smax, hi[0] + GAUSS_TAIL * smax, panel, order)

    def density(t, x):
        sig = np.exp(0.5 * t[:, 1:2])
        return _phi(x[None, :, 0] - t[:, :1], sig)

    def score(t, x):
        var = np.exp(t[:, 1:2])
        u = x[None, :, 0] - t[:, :1]
        return np.stack([u / var, -0.5 + 0.5 * u * u / var], axis=-1)

    def sampler(t, rng, size):
        return t[0] + math.exp(0.5 * t[1]) * rng.standard_normal((size, 1))

    return Model(density, grid, ParamDomain.real_space(2), score=score, sampler=sampler,
                 coverage=ParamDomain.box(lo, hi), name="gaussian_mean_logvar",
                 params={"theta_range": np.stack([lo, hi], 1).tolist()})


def exponential_rate(theta_range=(0.5, 4.0), x_max: float | None = None, panel: float = 0.25,
                     order: int = 12) -> Model:
    """Exponential with rate ``theta`` on ``(0, x_max]``; Fisher information ``1 / theta^2``."""
    lo, hi = _range(theta_range, 1)
    if x_max is None:
        x_max = math.log(1.0 / TAIL_LEVEL) / lo[0]
    grid = Grid1D.panels(0.0, x_max, panel, order)

    def density(t, x):
        r = t[:, :1]
        return r * np.exp(-r * x[None, :, 0])

    def score(t, x):
        return (1.0 / t[:, :1] - x[None, :, 0])[..., None]

    def sampler(t, rng, size):
        return rng.standard_exponential((size, 1)) / t[0]

    return Model(density, grid, ParamDomain.box([0.0], [np.inf]), score=score, sampler=sampler,
                 coverage=ParamDomain.box(lo, hi), name="exponential_rate",
                 params={"theta_range": [lo[0], hi[0]], "x_max": x_max})


def bernoulli() -> Model:
    """Bernoulli(theta) on atoms {0, 1} with counting measure; Fisher ``1 / (theta (1 - theta))``."""
    grid = Grid1D.atoms([0.0, 1.0])

    def density(t, x):
        th = t[:, :1]
        return np.where(x[None, :, 0] > 0.5, th, 1.0 - th)

    def score(t, x):
        th = t[:, :1]
        return np.where(x[None, :, 0] > 0.5, 1.0 / th, -1.0 / (1.0 - th))[..., None]

    def sampler(t, rng, size):
        return (rng.random((size, 1)) < t[0]).astype(float)

    return Model(density, grid, ParamDomain.box([0.0], [1.0]), score=score, sampler=sampler,
                 name="bernoulli")


def triangular_location(theta_range=(-1.0, 1.0), spacing: float = 1e-4) -> Model:
    """Location family whose root density is the triangle ``sqrt(3/2) (1 - |x - theta|)_+``.

    The density ``(3/2) (1 - |x - theta|)^2`` has a kink in ``theta`` at
    ``x = theta``, so it is not C^1 pointwise, yet the model is L2
    differentiable with Fisher information 12 and an L2 remainder of exact
    order ``h^{3/2}``.  On the trapezoid grid the jumps of ``xi_dot`` cost an
    O(spacing) error in the Fisher information (about 1e-3 at the default).
    """
    lo, hi = _range(theta_range, 1)
    a, b = lo[0] - 1.0, hi[0] + 1.0
    grid = Grid1D.trapezoid(a, b, int(round((b - a) / spacing)) + 1)
    c = 1.5

    def density(t, x):
        u = x[None, :, 0] - t[:, :1]
        return c * np.clip(1.0 - np.abs(u), 0.0, None) ** 2

    def root_derivative(t, x):
        # jumps at u = 0 and |u| = 1 take their midpoint value, which is what the
        # trapezoid rule needs when a jump falls on a node
        u = x[None, :, 0] - t[:, :1]
        a = np.abs(u)
        sgn = np.where(a <= JUMP_TOL, 0.0, np.sign(u))
        ind = np.where(np.abs(a - 1.0) <= JUMP_TOL, 0.5, (a < 1.0).astype(float))
        return (math.sqrt(c) * sgn * ind)[..., None]

    def sampler(t, rng, size):
        mag = 1.0 - rng.random((size, 1)) ** (1.0 / 3.0)
        sign = np.where(rng.random((size, 1)) < 0.5, -1.0, 1.0)
        return t[0] + sign * mag

    return Model(density, grid, ParamDomain.real_space(1), root_derivative=root_derivative,
                 sampler=sampler, coverage=ParamDomain.box(lo, hi), name="triangular_location",
                 params={"theta_range": [lo[0], hi[0]], "spacing": spacing})


def first_coordinate_gaussian(theta_range=((-2.0, 2.0), (-2.0, 2.0)), panel: float = 0.5,
                              order: int = 12) -> Model:
    """``N(theta_1, 1)`` indexed by ``theta in R^2``: Fisher information ``diag(1, 0)``."""
    lo, hi = _range(theta_range, 2)
    grid = Grid1D.panels(lo[0] - GAUSS_TAIL, hi[0] + GAUSS_TAIL, panel, order)

    def density(t, x):
        return _phi(x[None, :, 0] - t[:, :1])

    def score(t, x):
        u = x[None, :, 0] - t[:, :1]
        return np.stack([u, np.zeros_like(u)], axis=-1)

    def sampler(t, rng, size):
        return t[0] + rng.standard_normal((size, 1))

    return Model(density, grid, ParamDomain.real_space(2), score=score, sampler=sampler,
                 coverage=ParamDomain.box(lo, hi), name="first_coordinate_gaussian",
                 params={"theta_range": np.stack([lo, hi], 1).tolist()})


def constant_family(p: int = 1) -> Model:
    """Standard normal observations whatever ``theta`` is (zero Fisher information)."""
    grid = Grid1D.panels(-GAUSS_TAIL, GAUSS_TAIL, 0.5, 12)

    def density(t, x):
        return np.broadcast_to(_phi(x[None, :, 0]), (t.shape[0], x.shape[0]))

    def sampler(t, rng, size):
        return rng.standard_normal((size, 1))

    return Model(density, grid, ParamDomain.real_space(p), sampler=sampler, name="constant")


FAMILIES = {
    "gaussian_location": gaussian_location,
    "gaussian_location_nd": gaussian_location_nd,
    "gaussian_mean_logvar": gaussian_mean_logvar,
    "exponential_rate": exponential_rate,
    "bernoulli": bernoulli,
    "triangular_location": triangular_location,
    "first_coordinate_gaussian": first_coordinate_gaussian,
    "constant": constant_family,
}
