"""Dominated parametric models and their L2(mu) differential calculus.

A :class:`Model` is a family of densities ``f_theta`` with respect to a
dominating measure discretized by a quadrature grid.  Everything is expressed
through root densities ``xi_theta = sqrt(f_theta)`` and their L2(mu) partial
derivatives along canonical directions, never through pointwise derivatives
of ``f_theta`` itself.

Evaluator conventions (batched over parameters):

* ``density(theta, x)``: ``theta`` of shape ``(m, p)``, ``x`` of shape ``(N, d)`` -> ``(m, N)``
* ``score(theta, x)``: gradient of ``log f_theta(x)`` -> ``(m, N, p)`` (0 where ``f = 0``)
* ``root_derivative(theta, x)``: L2 partial derivatives of ``xi`` -> ``(m, N, p)``
* ``sampler(theta, rng, size)``: ``theta`` of shape ``(p,)`` -> ``(size, d)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (CapabilityError, ContractViolation, DimensionError, DomainError,
                     InsufficientDataError, ModelDefinitionError, StepError)
from .numerics import Grid1D, GridP, RateFit, fit_rate, integrate, symmetrize

#: relative finite-difference step for L2 derivatives: ``h = FD_STEP * max(1, |theta_i|)``
FD_STEP = 1e-4
NORMALIZATION_TOL = 1e-8
DQM_MARGIN = 0.3


@dataclass(frozen=True, eq=False)
class ParamDomain:
    """Open box ``prod_i (lower_i, upper_i)`` (infinite ends allowed), optionally cut by a predicate."""

    lower: np.ndarray
    upper: np.ndarray
    predicate: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("lower and upper bounds must be vectors of the same length")
        if np.any(lo >= hi):
            raise ValueError("empty parameter box")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def box(cls, lower, upper, predicate=None) -> "ParamDomain":
        return cls(lower, upper, predicate)

    @classmethod
    def real_space(cls, p: int = 1) -> "ParamDomain":
        return cls(np.full(p, -np.inf), np.full(p, np.inf))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, theta) -> np.ndarray:
        """Boolean mask over rows of ``theta`` (shape ``(m, p)`` or ``(p,)``)."""
        t = np.atleast_2d(np.asarray(theta, dtype=float))
        inside = np.all((t > self.lower) & (t < self.upper), axis=1)
        if self.predicate is not None:
            inside &= np.asarray(self.predicate(t), dtype=bool)
        return inside if np.ndim(theta) > 1 else inside[0]

    def finite_faces(self) -> list[tuple[int, str, float]]:
        faces = []
        for i in range(self.dim):
            if np.isfinite(self.lower[i]):
                faces.append((i, "lower", float(self.lower[i])))
            if np.isfinite(self.upper[i]):
                faces.append((i, "upper", float(self.upper[i])))
        return faces

    def describe(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


class Statistic:
    """A statistic ``x -> S(x)`` in R^s with an optional uniform bound."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], bound: float | None = None,
                 dim: int = 1, name: str = "S"):
        self.func = func
        self.bound = bound
        self.dim = dim
        self.name = name

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        out = np.asarray(self.func(x), dtype=float)
        out = out.reshape(x.shape[0], -1)
        if out.shape[1] != self.dim:
            raise DimensionError(f"statistic {self.name} returned {out.shape[1]} components, "
                                 f"declared {self.dim}")
        if self.bound is not None and np.any(np.abs(out) > self.bound * (1 + 1e-12)):
            raise ContractViolation(f"statistic {self.name} exceeds its declared bound {self.bound}")
        return out

    @property
    def bounded(self) -> bool:
        return self.bound is not None

    def clamped(self, level: float) -> "Statistic":
        return Statistic(lambda x: np.clip(self.func(x), -level, level), bound=level,
                         dim=self.dim, name=f"clamp({self.name},{level:g})")

    def __repr__(self) -> str:
        return f"Statistic({self.name}, dim={self.dim}, bound={self.bound})"


def constant_statistic(value=0.0) -> Statistic:
    value = np.atleast_1d(np.asarray(value, dtype=float))
    return Statistic(lambda x: np.broadcast_to(value, (x.shape[0], value.size)),
                     bound=float(np.max(np.abs(value))), dim=value.size, name=f"const{value.tolist()}")


def identity_statistic(d: int = 1) -> Statistic:
    return Statistic(lambda x: x[:, :d], bound=None, dim=d, name="identity")


def indicator_statistic(threshold: float = 0.0, axis: int = 0) -> Statistic:
    """``1{x_axis > threshold}``."""
    return Statistic(lambda x: (x[:, axis] > threshold).astype(float), bound=1.0, dim=1,
                     name=f"1{{x{axis}>{threshold:g}}}")


def sample_mean(d: int = 1) -> Statistic:
    """Sample mean for points of ``X^n`` stored as rows of length ``n * d``."""
    def mean(x):
        return x.reshape(x.shape[0], -1, d).mean(axis=1)
    return Statistic(mean, bound=None, dim=d, name="sample_mean")


class Model:
    """A mu-dominated parametric model discretized on a sample-space grid."""

    def __init__(self, density, grid: Grid1D | GridP | None, domain: ParamDomain, *,
                 score=None, root_derivative=None, sampler=None, coverage: ParamDomain | None = None,
                 name: str = "model", params: dict | None = None):
        self.density = density
        self._grid = grid
        self.domain = domain
        self.score = score
        self._root_derivative = root_derivative
        self.sampler = sampler
        self.coverage = coverage
        self.name = name
        self.params = dict(params or {})

    @property
    def p(self) -> int:
        return self.domain.dim

    @property
    def grid(self):
        return self._grid

    @property
    def has_analytic_score(self) -> bool:
        return self.score is not None or self._root_derivative is not None

    def describe(self) -> dict:
        out = {"name": self.name, "p": self.p, "domain": self.domain.describe(), **self.params}
        try:
            out["sample_grid"] = self.grid.describe()
        except CapabilityError:
            out["sample_grid"] = "sampling only"
        return out

    # -- evaluation helpers ------------------------------------------------------

    def thetas(self, theta, check: bool = True) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        if t.ndim > 2 or (t.ndim == 2 and t.shape[1] != self.p) or (t.ndim <= 1 and t.size % self.p):
            raise DimensionError(f"model {self.name} has p={self.p}, got theta of shape {t.shape}")
        t = t.reshape(-1, self.p) if t.ndim <= 1 else t
        if check:
            if not np.all(self.domain.contains(t)):
                raise DomainError(f"theta outside the parameter set of {self.name}: "
                                  f"{t[~self.domain.contains(t)][:3].tolist()}")
            if self.coverage is not None and not np.all(self.coverage.contains(t)):
                raise DomainError(f"theta outside the range covered by the sample grid of {self.name}")
        return t

    def _points(self, x):
        return self.grid.points if x is None else np.asarray(x, dtype=float).reshape(len(x), -1)

    def f(self, theta, x=None, check: bool = True) -> np.ndarray:
        """Density values, shape ``(m, N)``."""
        t = self.thetas(theta, check)
        vals = np.asarray(self.density(t, self._points(x)), dtype=float)
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ModelDefinitionError(f"model {self.name} returned a negative or non-finite density")
        return vals

    def xi(self, theta, x=None, check: bool = True) -> np.ndarray:
        return np.sqrt(self.f(theta, x, check))

    def xi_dot(self, theta, x=None, h=None, method: str = "auto") -> np.ndarray:
        """L2 partial derivatives of the root density, shape ``(m, N, p)``.

        ``method`` is ``"analytic"``, ``"fd"`` (central differences) or ``"auto"``.
        """
        t = self.thetas(theta)
        pts = self._points(x)
        if method == "auto":
            method = "analytic" if self.has_analytic_score else "fd"
        if method == "analytic":
            if self._root_derivative is not None:
                return np.asarray(self._root_derivative(t, pts), dtype=float)
            if self.score is None:
                raise ValueError(f"model {self.name} has no analytic score")
            xi = np.sqrt(self.f(t, pts))
            return 0.5 * np.asarray(self.score(t, pts), dtype=float) * xi[..., None]
        if method != "fd":
            raise ValueError(f"unknown derivative method {method!r}")
        return np.stack([self._fd_component(t, pts, i, h)[0] for i in range(self.p)], axis=-1)

    def _fd_component(self, t, pts, i, h=None):
        h = default_step(t[:, i]) if h is None else np.broadcast_to(np.asarray(h, dtype=float), t.shape[:1])
        e = np.zeros(self.p)
        e[i] = 1.0
        plus = t + h[:, None] * e
        minus = t - h[:, None] * e
        if not (np.all(self.domain.contains(plus)) and np.all(self.domain.contains(minus))):
            raise StepError(f"theta +- h e_{i} leaves the parameter set of {self.name}; shrink h")
        fp = self.f(plus, pts)
        fm = self.f(minus, pts)
        flagged = int(np.sum((fp == 0) ^ (fm == 0)))
        return (np.sqrt(fp) - np.sqrt(fm)) / (2 * h[:, None]), flagged

    def expectation(self, theta, stat: Statistic) -> np.ndarray:
        """``E_theta[S]`` for each row of ``theta``: shape ``(m, s)``."""
        vals = stat(self.grid.points)
        return self.f(theta) * self.grid.weights @ vals

    def sample(self, theta, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sampler is None:
            raise CapabilityError(f"model {self.name} has no sampler")
        t = self.thetas(theta)[0]
        return np.asarray(self.sampler(t, rng, size), dtype=float).reshape(size, -1)


def default_step(theta_i) -> np.ndarray:
    return FD_STEP * np.maximum(1.0, np.abs(np.asarray(theta_i, dtype=float)))


# --- operations ------------------------------------------------------------------


@dataclass(frozen=True)
class RootDensity:
    values: np.ndarray
    norm2: float


def root_density(model: Model, theta) -> RootDensity:
    xi = model.xi(theta)[0]
    return RootDensity(xi, integrate(xi**2, model.grid))


@dataclass(frozen=True)
class ScoreComponent:
    """One L2 partial derivative on the sample grid, with its provenance."""

    values: np.ndarray
    provenance: str
    h: float
    fd_distance: float | None = None
    flagged_nodes: int = 0


def l2_partial_derivative(model: Model, theta, i: int, h: float | None = None) -> ScoreComponent:
    t = model.thetas(theta)
    if not 0 <= i < model.p:
        raise DimensionError(f"direction {i} out of range for p={model.p}")
    h = float(default_step(t[0, i])) if h is None else float(h)
    if h <= 0:
        raise ValueError("h must be positive")
    pts = model.grid.points
    fd, flagged = model._fd_component(t, pts, i, h)
    fd = fd[0]
    if not model.has_analytic_score:
        return ScoreComponent(fd, f"finite-difference({h:g})", h, None, flagged)
    an = model.xi_dot(t, method="analytic")[0, :, i]
    dist = math.sqrt(integrate((an - fd) ** 2, model.grid))
    return ScoreComponent(an, "analytic", h, dist, flagged)


def dqm_certify(model: Model, theta, i: int, h_sequence: Sequence[float] | None = None,
                margin: float = DQM_MARGIN) -> RateFit:
    """Fit the decay rate of the L2 remainder ``||xi_{theta+h e_i} - xi_theta - h xi_dot_i||``.

    The remainder is taken as the larger of the two one-sided values.  The
    fit is certified when its slope exceeds ``1 + margin``.
    """
    t = model.thetas(theta)
    if h_sequence is None:
        base = 0.1 * max(1.0, abs(t[0, i]))
        h_sequence = base * 0.5 ** np.arange(6)
    xi0 = model.xi(t)[0]
    xd = model.xi_dot(t)[0, :, i]
    e = np.zeros(model.p)
    e[i] = 1.0
    pairs = []
    for h in h_sequence:
        shifted = [t[0] + s * h * e for s in (1.0, -1.0)]
        if not all(model.domain.contains(s) for s in shifted):
            continue
        res = max(math.sqrt(integrate((model.xi(s)[0] - xi0 - sg * h * xd) ** 2, model.grid))
                  for s, sg in zip(shifted, (1.0, -1.0)))
        pairs.append((h, res))
    if len(pairs) < 3:
        raise InsufficientDataError("fewer than 3 usable steps inside the parameter set")
    return fit_rate(pairs, noise_floor=1e-15, threshold=1.0 + margin)


def fisher_batch(model: Model, thetas) -> np.ndarray:
    """Fisher information matrices ``4 int xi_dot (x) xi_dot dmu`` for each row: ``(m, p, p)``."""
    xd = model.xi_dot(thetas)
    w = model.grid.weights
    return 4.0 * np.einsum("mni,mnj,n->mij", xd, xd, w)


def fisher_information(model: Model, theta) -> np.ndarray:
    return symmetrize(fisher_batch(model, theta)[0])


def score_orthogonality(model: Model, theta) -> np.ndarray:
    """``int xi_dot_i xi dmu`` per direction (zero for L2-differentiable models)."""
    xi = model.xi(theta)[0]
    xd = model.xi_dot(theta)[0]
    return integrate(xd.T * xi, model.grid)


def gamma_derivative(model: Model, theta, stat: Statistic, i: int,
                     check_tol: float | None = 1e-5) -> float:
    """Derivative of ``theta -> E_theta[T]`` in direction ``i`` from the L2 derivative.

    ``2 int xi_dot_i xi T dmu``; cross-checked against a central difference
    of the expectation unless ``check_tol`` is None.
    """
    if not stat.bounded:
        raise ContractViolation("gamma_derivative needs a uniformly bounded statistic")
    if stat.dim != 1:
        raise DimensionError("gamma_derivative expects a scalar statistic")
    t = model.thetas(theta)
    T = stat(model.grid.points)[:, 0]
    xi = model.xi(t)[0]
    xd = model.xi_dot(t)[0, :, i]
    value = 2.0 * integrate(xd * xi * T, model.grid)
    if check_tol is not None:
        h = float(default_step(t[0, i]))
        e = np.zeros(model.p)
        e[i] = h
        try:
            fd = (model.expectation(t + e, stat)[0, 0] - model.expectation(t - e, stat)[0, 0]) / (2 * h)
        except StepError:
            fd = None
        if fd is not None and abs(fd - value) > check_tol:
            raise ContractViolation(f"L2-derivative formula gives {value:.10g}, which disagrees with the finite "
                                    f"difference {fd:.10g} of E_theta[T]")
    return float(value)


# --- product experiments -------------------------------------------------------------

MAX_PRODUCT_NODES = 2_000_000


class ProductModel(Model):
    """``n`` i.i.d. copies of a base model; points of ``X^n`` are rows of length ``n * d``."""

    def __init__(self, base: Model, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.base = base
        self.n = n
        self.d = base.grid.points.shape[1] if base.grid is not None else 1
        super().__init__(self._density, None, base.domain, root_derivative=self._root_derivative_sum,
                         sampler=self._sample if base.sampler is not None else None,
                         coverage=base.coverage, name=f"{base.name}^{n}",
                         params={"n": n, "base": base.name})
        self._grid_cache = None

    @property
    def tractable(self) -> bool:
        return self.n <= 3 and self.base.grid.size ** self.n <= MAX_PRODUCT_NODES

    @property
    def grid(self):
        if not self.tractable:
            raise CapabilityError(f"direct quadrature over X^{self.n} is intractable; use sampling")
        if self._grid_cache is None:
            self._grid_cache = GridP(list(self.base.grid.axes) * self.n)
        return self._grid_cache

    def _blocks(self, x):
        return [x[:, k * self.d:(k + 1) * self.d] for k in range(self.n)]

    def _density(self, t, x):
        out = np.ones((t.shape[0], x.shape[0]))
        for xk in self._blocks(x):
            out *= self.base.f(t, xk, check=False)
        return out

    def _root_derivative_sum(self, t, x):
        blocks = self._blocks(x)
        roots = [self.base.xi(t, xk) for xk in blocks]
        derivs = [self.base.xi_dot(t, xk) for xk in blocks]
        total = np.zeros(derivs[0].shape)
        for k in range(self.n):
            others = np.ones_like(roots[0])
            for kk in range(self.n):
                if kk != k:
                    others = others * roots[kk]
            total += derivs[k] * others[..., None]
        return total

    def _sample(self, t, rng, size):
        draws = self.base.sampler(t, rng, size * self.n)
        return np.asarray(draws).reshape(size, self.n * self.d)


def product_model(model: Model, n: int) -> ProductModel:
    return ProductModel(model, n)


def normalization_error(model: Model, theta) -> float:
    return float(np.max(np.abs(integrate(model.f(theta), model.grid) - 1.0)))
