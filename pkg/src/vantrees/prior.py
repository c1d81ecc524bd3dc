"""Well-behaved priors on open parameter sets.

A prior carries its density ``q``, the gradient ``grad q`` (analytic for the
built-ins, central differences otherwise), a support box, a quadrature grid
covering that box, and a sampler.  Densities are batched: ``q(theta)`` takes
``(m, p)`` and returns ``(m,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (DegenerateJointError, DimensionError, DomainError, IntegrabilityError,
                     ModelDefinitionError)
from .model import Model, ParamDomain, Statistic
from .numerics import GAUSS_TAIL, Grid1D, GridP, integrate, symmetrize

DEFAULT_NODES = 64
#: nodes with ``q <= Q_MIN_REL * max q`` are masked out of ``(grad q)^2 / q``
Q_MIN_REL = 1e-12
MASKED_MASS_TOL = 1e-8
CHUNK = 2_000_000


class Prior:
    """Prior density on an open set ``Theta`` with a quadrature grid over its support."""

    def __init__(self, density: Callable, grid: Grid1D | GridP, domain: ParamDomain,
                 support_lower, support_upper, *, gradient: Callable | None = None,
                 sampler: Callable | None = None, name: str = "prior", params: dict | None = None):
        self.density = density
        self.grid = grid
        self.domain = domain
        self.support_lower = np.atleast_1d(np.asarray(support_lower, dtype=float))
        self.support_upper = np.atleast_1d(np.asarray(support_upper, dtype=float))
        self.gradient = gradient
        self.sampler = sampler
        self.name = name
        self.params = dict(params or {})
        if self.support_lower.size != domain.dim or self.grid.dim != domain.dim:
            raise DimensionError("support, grid and domain dimensions disagree")

    @property
    def p(self) -> int:
        return self.domain.dim

    @property
    def compact(self) -> bool:
        return bool(np.all(np.isfinite(self.support_lower)) and np.all(np.isfinite(self.support_upper)))

    def _t(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        t = t.reshape(-1, self.p) if t.ndim <= 1 else t
        if t.shape[1] != self.p:
            raise DimensionError(f"prior {self.name} has p={self.p}, got shape {t.shape}")
        return t

    def q(self, theta) -> np.ndarray:
        vals = np.asarray(self.density(self._t(theta)), dtype=float)
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ModelDefinitionError(f"prior {self.name} returned a negative or non-finite density")
        return vals

    def grad(self, theta) -> np.ndarray:
        t = self._t(theta)
        if self.gradient is not None:
            return np.asarray(self.gradient(t), dtype=float)
        out = np.empty_like(t)
        for i in range(self.p):
            width = self.support_upper[i] - self.support_lower[i]
            h = 1e-5 * (width if np.isfinite(width) else np.maximum(1.0, np.abs(t[:, i])))
            e = np.zeros(self.p)
            e[i] = 1.0
            hh = np.broadcast_to(h, t.shape[:1])[:, None]
            out[:, i] = (self.density(t + hh * e) - self.density(t - hh * e)) / (2 * hh[:, 0])
        return out

    def in_support(self, theta) -> np.ndarray:
        return self.q(theta) > 0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sampler is None:
            raise NotImplementedError(f"prior {self.name} has no sampler")
        return np.asarray(self.sampler(rng, size), dtype=float).reshape(size, self.p)

    def describe(self) -> dict:
        return {"name": self.name, "p": self.p, "support": [self.support_lower.tolist(),
                                                           self.support_upper.tolist()],
                "grid": self.grid.describe(), **self.params}


# --- built-in one-dimensional factors ---------------------------------------------------


def _box_domain(lo, hi, domain):
    return ParamDomain.box([lo], [hi]) if domain is None else domain


def raised_cosine(center: float = 0.0, half_width: float = 1.0, domain: ParamDomain | None = None,
                  nodes: int = DEFAULT_NODES) -> Prior:
    """``q(t) = cos^2(pi u / 2) / w`` with ``u = (t - center) / w`` on ``|u| < 1``; ``I_Q = pi^2 / w^2``."""
    c, w = float(center), float(half_width)

    def q(t):
        u = (t[:, 0] - c) / w
        return np.where(np.abs(u) < 1, np.cos(0.5 * np.pi * u) ** 2 / w, 0.0)

    def dq(t):
        u = (t[:, 0] - c) / w
        return np.where(np.abs(u) < 1, -0.5 * np.pi * np.sin(np.pi * u) / w**2, 0.0)[:, None]

    def sampler(rng, size):
        out = np.empty(0)
        while out.size < size:
            u = rng.uniform(-1, 1, 2 * size)
            out = np.concatenate([out, u[rng.random(u.size) < np.cos(0.5 * np.pi * u) ** 2]])
        return (c + w * out[:size])[:, None]

    return Prior(q, Grid1D.gauss_legendre(c - w, c + w, nodes), _box_domain(c - w, c + w, domain),
                 [c - w], [c + w], gradient=dq, sampler=sampler, name="raised_cosine",
                 params={"center": c, "half_width": w})


def quartic_bump(center: float = 0.0, half_width: float = 1.0, domain: ParamDomain | None = None,
                 nodes: int = DEFAULT_NODES) -> Prior:
    """``q(t) = (15/16) (1 - u^2)^2 / w`` on ``|u| < 1``; ``I_Q = 10 / w^2``."""
    c, w = float(center), float(half_width)

    def q(t):
        u = (t[:, 0] - c) / w
        return np.where(np.abs(u) < 1, 15.0 / 16.0 * (1 - u * u) ** 2 / w, 0.0)

    def dq(t):
        u = (t[:, 0] - c) / w
        return np.where(np.abs(u) < 1, -3.75 * u * (1 - u * u) / w**2, 0.0)[:, None]

    def sampler(rng, size):
        return (c + w * (2.0 * rng.beta(3.0, 3.0, size) - 1.0))[:, None]

    return Prior(q, Grid1D.gauss_legendre(c - w, c + w, nodes), _box_domain(c - w, c + w, domain),
                 [c - w], [c + w], gradient=dq, sampler=sampler, name="quartic_bump",
                 params={"center": c, "half_width": w})


def gaussian_prior(mean: float = 0.0, tau: float = 1.0, nodes: int = DEFAULT_NODES) -> Prior:
    """``N(mean, tau^2)`` on ``R``; integrated on ``mean +- GAUSS_TAIL * tau``.  ``I_Q = 1 / tau^2``."""
    m, s = float(mean), float(tau)
    half = GAUSS_TAIL * s

    def q(t):
        return np.exp(-0.5 * ((t[:, 0] - m) / s) ** 2) / (math.sqrt(2 * math.pi) * s)

    def dq(t):
        return (-(t[:, 0] - m) / s**2 * q(t))[:, None]

    def sampler(rng, size):
        return (m + s * rng.standard_normal(size))[:, None]

    return Prior(q, Grid1D.gauss_legendre(m - half, m + half, nodes), ParamDomain.real_space(1),
                 [-np.inf], [np.inf], gradient=dq, sampler=sampler, name="gaussian",
                 params={"mean": m, "tau": s, "truncation": [m - half, m + half]})


def uniform_prior(lower: float = 0.0, upper: float = 1.0, domain: ParamDomain | None = None,
                  nodes: int = DEFAULT_NODES) -> Prior:
    """Uniform density; it does not vanish at the boundary (I_Q = 0), useful as a failing case."""
    lo, hi = float(lower), float(upper)

    def q(t):
        return np.where((t[:, 0] > lo) & (t[:, 0] < hi), 1.0 / (hi - lo), 0.0)

    def dq(t):
        return np.zeros((t.shape[0], 1))

    def sampler(rng, size):
        return rng.uniform(lo, hi, (size, 1))

    return Prior(q, Grid1D.gauss_legendre(lo, hi, nodes), _box_domain(lo, hi, domain), [lo], [hi],
                 gradient=dq, sampler=sampler, name="uniform", params={"lower": lo, "upper": hi})


def tabulated_prior(thetas, values, domain: ParamDomain | None = None, nodes: int = DEFAULT_NODES,
                    normalization_tol: float = 1e-6) -> Prior:
    """Density given on a sorted grid, interpolated with a shape-preserving cubic (PCHIP)."""
    thetas = np.asarray(thetas, dtype=float)
    values = np.asarray(values, dtype=float)
    if thetas.ndim != 1 or thetas.shape != values.shape or thetas.size < 4:
        raise DimensionError("tabulated prior needs matching 1-D theta and q columns (>= 4 rows)")
    if np.any(values < 0):
        raise ModelDefinitionError("tabulated prior has negative density values")
    lo, hi = float(thetas[0]), float(thetas[-1])
    interp = PchipInterpolator(thetas, values, extrapolate=False)
    deriv = interp.derivative()
    grid = Grid1D.gauss_legendre(lo, hi, nodes)

    def q(t):
        return np.clip(np.nan_to_num(interp(t[:, 0])), 0.0, None)

    def dq(t):
        return np.nan_to_num(deriv(t[:, 0]))[:, None]

    mass = integrate(q(grid.points), grid)
    if abs(mass - 1.0) > normalization_tol:
        raise ModelDefinitionError(f"tabulated prior integrates to {mass:.10g}, not 1")

    def sampler(rng, size):
        fine = np.linspace(lo, hi, 20001)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (q(fine[1:, None]) + q(fine[:-1, None])) * np.diff(fine))])
        return np.interp(rng.random(size) * cdf[-1], cdf, fine)[:, None]

    return Prior(q, grid, _box_domain(lo, hi, domain), [lo], [hi], gradient=dq, sampler=sampler,
                 name="tabulated", params={"rows": int(thetas.size)})


def product_prior(factors: Sequence[Prior], domain: ParamDomain | None = None) -> Prior:
    """Independent product of one-dimensional priors."""
    factors = list(factors)
    if any(f.p != 1 for f in factors):
        raise DimensionError("product_prior takes one-dimensional factors")
    p = len(factors)

    def q(t):
        out = np.ones(t.shape[0])
        for i, f in enumerate(factors):
            out = out * f.q(t[:, i:i + 1])
        return out

    def dq(t):
        vals = np.stack([f.q(t[:, i:i + 1]) for i, f in enumerate(factors)], axis=1)
        ders = np.stack([f.grad(t[:, i:i + 1])[:, 0] for i, f in enumerate(factors)], axis=1)
        out = np.empty_like(t)
        for i in range(p):
            out[:, i] = ders[:, i] * np.prod(np.delete(vals, i, axis=1), axis=1)
        return out

    def sampler(rng, size):
        return np.concatenate([f.sample(rng, size) for f in factors], axis=1)

    lo = np.concatenate([f.support_lower for f in factors])
    hi = np.concatenate([f.support_upper for f in factors])
    if domain is None:
        domain = ParamDomain.box(np.concatenate([f.domain.lower for f in factors]),
                                 np.concatenate([f.domain.upper for f in factors]))
    return Prior(q, GridP([f.grid for f in factors]), domain, lo, hi, gradient=dq, sampler=sampler,
                 name="product(" + ",".join(f.name for f in factors) + ")",
                 params={"factors": [f.describe() for f in factors]})


def default_base_prior(p: int, nodes: int = DEFAULT_NODES) -> Prior:
    """Product quartic bump on ``(-1/sqrt(p), 1/sqrt(p))^p`` (inside the unit ball); ``I = 10 p I_p``."""
    w = 1.0 / math.sqrt(p)
    if p == 1:
        return quartic_bump(0.0, w, domain=ParamDomain.real_space(1), nodes=nodes)
    return product_prior([quartic_bump(0.0, w, domain=ParamDomain.real_space(1), nodes=nodes)
                          for _ in range(p)], domain=ParamDomain.real_space(p))


def scaled_prior(base: Prior, theta0, r: float, domain: ParamDomain | None = None) -> Prior:
    """Distribution of ``theta0 + r H`` for ``H`` distributed as ``base``.

    Raises :class:`DomainError` when the scaled support leaves ``domain``
    (default: the whole space).
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    r = float(r)
    if r <= 0:
        raise ValueError("r must be positive")
    p = base.p
    if theta0.size != p:
        raise DimensionError("theta0 and base prior dimensions disagree")
    domain = ParamDomain.real_space(p) if domain is None else domain
    lo = theta0 + r * base.support_lower
    hi = theta0 + r * base.support_upper
    if not _box_inside(lo, hi, domain):
        raise DomainError(f"scaled support [{lo.tolist()}, {hi.tolist()}] escapes the parameter set")

    def q(t):
        return base.q((t - theta0) / r) / r**p

    def dq(t):
        return base.grad((t - theta0) / r) / r ** (p + 1)

    def sampler(rng, size):
        return theta0 + r * base.sample(rng, size)

    axes = [Grid1D(theta0[i] + r * ax.nodes, r * ax.weights, ax.kind, dict(ax.meta))
            for i, ax in enumerate(base.grid.axes)]
    grid = axes[0] if p == 1 and isinstance(base.grid, Grid1D) else GridP(axes)
    return Prior(q, grid, domain, lo, hi, gradient=dq,
                 sampler=sampler if base.sampler is not None else None,
                 name=f"scaled({base.name})", params={"theta0": theta0.tolist(), "r": r})


def _box_inside(lo, hi, domain: ParamDomain) -> bool:
    closed_ok = np.all(lo >= domain.lower) and np.all(hi <= domain.upper)
    return bool(closed_ok)


# --- operations ------------------------------------------------------------------------


def prior_information(prior: Prior) -> np.ndarray:
    """``int grad q (x) grad q 1{q > 0} / q`` over the prior grid (masked where ``q`` is tiny)."""
    pts = prior.grid.points
    qv = prior.q(pts)
    g = prior.grad(pts)
    qmax = float(np.max(qv)) if qv.size else 0.0
    keep = qv > Q_MIN_REL * qmax
    masked = integrate(np.where(keep, 0.0, qv), prior.grid)
    if masked > MASKED_MASS_TOL:
        raise IntegrabilityError(f"masked prior mass {masked:.3g} exceeds {MASKED_MASS_TOL:g}")
    ratio = np.where(keep, 1.0, 0.0) / np.where(keep, qv, 1.0)
    integrand = np.einsum("ni,nj,n->ijn", g, g, ratio)
    info = symmetrize(integrate(integrand, prior.grid))
    if not np.all(np.isfinite(info)):
        raise IntegrabilityError("prior information is not finite")
    return info


def prior_mass(prior: Prior) -> float:
    return integrate(prior.q(prior.grid.points), prior.grid)


@dataclass(frozen=True)
class BoundaryCheck:
    passed: bool
    failures: list
    probes: list

    def __bool__(self) -> bool:
        return self.passed


def boundary_vanish_check(prior: Prior, tol: float = 1e-8, depth: int = 6) -> BoundaryCheck:
    """Probe ``q`` along each canonical direction towards every finite face of ``Theta``.

    A face passes when the values decrease as the offset shrinks and the
    value at the smallest offset is ``<= tol``.
    """
    faces = prior.domain.finite_faces()
    failures, probes = [], []
    finite = np.isfinite(prior.support_lower) & np.isfinite(prior.support_upper)
    center = np.zeros(prior.p)
    center[finite] = 0.5 * (prior.support_lower[finite] + prior.support_upper[finite])
    for axis, side, value in faces:
        width = prior.domain.upper[axis] - prior.domain.lower[axis]
        scale = min(1.0, width) if np.isfinite(width) else 1.0
        offsets = scale * 10.0 ** -np.arange(1, depth + 1)
        sign = 1.0 if side == "lower" else -1.0
        sections = _sections(prior, axis, center)
        bad = False
        worst = 0.0
        for sec in sections:
            pts = np.repeat(sec[None, :], offsets.size, axis=0)
            pts[:, axis] = value + sign * offsets
            vals = prior.q(pts)
            worst = max(worst, float(vals[-1]))
            if vals[-1] > tol or np.any(np.diff(vals) > 1e-12 * max(1.0, float(np.max(vals)))):
                bad = True
        probes.append({"axis": axis, "side": side, "value": value, "q_at_smallest_offset": worst})
        if bad:
            failures.append((axis, side, value))
    return BoundaryCheck(not failures, failures, probes)


def _sections(prior: Prior, axis: int, center: np.ndarray) -> list[np.ndarray]:
    if prior.p == 1:
        return [center.copy()]
    secs = [center.copy()]
    for i in range(prior.p):
        if i == axis or not (np.isfinite(prior.support_lower[i]) and np.isfinite(prior.support_upper[i])):
            continue
        half = 0.5 * (prior.support_upper[i] - prior.support_lower[i])
        for frac in (-0.5, 0.5):
            s = center.copy()
            s[i] += frac * half
            secs.append(s)
    return secs


def posterior_mean(model: Model, prior: Prior) -> Statistic:
    """Statistic ``x -> int theta f_theta(x) q(theta) dtheta / int f_theta(x) q(theta) dtheta``.

    Computed by quadrature over the prior grid, one column per sample point.
    """
    if model.p != prior.p:
        raise DimensionError("model and prior dimensions disagree")
    pts = prior.grid.points
    qv = prior.q(pts)
    keep = qv > 0
    pts, wq = pts[keep], (prior.grid.weights * qv)[keep]
    bound = float(np.max(np.abs(pts)))

    def mean(x):
        out = np.empty((x.shape[0], prior.p))
        step = max(1, CHUNK // max(1, pts.shape[0]))
        for s in range(0, x.shape[0], step):
            f = model.f(pts, x[s:s + step])
            den = wq @ f
            if np.any(den <= 0):
                raise DegenerateJointError("the marginal density of x vanishes at a sample node")
            out[s:s + step] = ((wq[:, None] * f).T @ pts) / den[:, None]
        return out

    return Statistic(mean, bound=bound, dim=prior.p, name="posterior_mean")
