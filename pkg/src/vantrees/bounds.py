"""Cramer-Rao and van Trees lower bounds, and residual checks of the identities behind them.

The van Trees machinery is organised around the field

    Delta(x, theta) = grad q(theta) 1{q > 0} / (2 sqrt q(theta)) * xi_theta(x)
                      + sqrt q(theta) * xi_dot_theta(x),

evaluated on the tensor grid (prior grid) x (sample grid).  Every
theta-integral runs over the prior grid; every x-integral over the model's
sample grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import (ContractViolation, DimensionError, InsufficientDataError, IntegrabilityError,
                     SingularInformationError)
from . import report
from .model import Model, Statistic
from .numerics import integrate, make_rng, pinv_sym, pooled_mean, psd_check, split_seeds, symmetrize
from .prior import CHUNK, Q_MIN_REL, Prior, prior_information

MC_MIN_DRAWS = 100


class Target:
    """Estimation target ``psi: Theta -> R^s`` with gradient ``(m, p, s)`` (analytic or central differences)."""

    def __init__(self, func: Callable, grad: Callable | None = None, p: int = 1, s: int = 1,
                 name: str = "psi", bound: float | None = None):
        self.func = func
        self._grad = grad
        self.p = p
        self.s = s
        self.name = name
        self.bound = bound

    def _t(self, theta):
        t = np.asarray(theta, dtype=float)
        return t.reshape(-1, self.p) if t.ndim <= 1 else t

    def __call__(self, theta) -> np.ndarray:
        t = self._t(theta)
        return np.asarray(self.func(t), dtype=float).reshape(t.shape[0], self.s)

    def gradient(self, theta, method: str = "auto") -> np.ndarray:
        t = self._t(theta)
        if self._grad is not None and method in ("auto", "analytic"):
            return np.asarray(self._grad(t), dtype=float).reshape(t.shape[0], self.p, self.s)
        out = np.empty((t.shape[0], self.p, self.s))
        for i in range(self.p):
            h = 1e-5 * np.maximum(1.0, np.abs(t[:, i]))[:, None]
            e = np.zeros(self.p)
            e[i] = 1.0
            out[:, i, :] = (self(t + h * e) - self(t - h * e)) / (2 * h)
        return out

    def check_gradient(self, points, tol: float = 1e-5) -> float:
        """Largest gap between the gradient and its central-difference estimate at ``points``."""
        gap = float(np.max(np.abs(self.gradient(points) - self.gradient(points, method="fd"))))
        if gap > tol:
            raise ContractViolation(f"gradient of {self.name} off by {gap:.3g} from finite differences")
        return gap

    def scaled(self, a: float) -> "Target":
        grad = None if self._grad is None else (lambda t: a * self._grad(t))
        return Target(lambda t: a * self.func(t), grad, self.p, self.s, f"{a:g}*{self.name}",
                      None if self.bound is None else abs(a) * self.bound)


def identity_target(p: int = 1) -> Target:
    return Target(lambda t: t, lambda t: np.broadcast_to(np.eye(p), (t.shape[0], p, p)), p, p, "id")


def clamped_identity(p: int = 1, level: float = 10.0) -> Target:
    """``clip(theta, -level, level)`` componentwise (bounded, with bounded derivative)."""
    def grad(t):
        inside = (np.abs(t) < level).astype(float)
        return inside[:, :, None] * np.eye(p)[None]
    return Target(lambda t: np.clip(t, -level, level), grad, p, p, f"clamp_id({level:g})", level)


def constant_target(value=0.0, p: int = 1) -> Target:
    value = np.atleast_1d(np.asarray(value, dtype=float))
    s = value.size
    return Target(lambda t: np.broadcast_to(value, (t.shape[0], s)),
                  lambda t: np.zeros((t.shape[0], p, s)), p, s, f"const{value.tolist()}",
                  float(np.max(np.abs(value))))


def square_target() -> Target:
    return Target(lambda t: t**2, lambda t: (2 * t)[:, :, None], 1, 1, "theta^2")


# --- shared tensor-grid sweep --------------------------------------------------------------


@dataclass
class _Chunk:
    theta: np.ndarray      # (m, p) prior nodes with q > 0
    wq: np.ndarray         # (m,) quadrature weights of the prior grid
    q: np.ndarray          # (m,)
    dq: np.ndarray         # (m, p)
    f: np.ndarray          # (m, N)
    xi: np.ndarray         # (m, N)
    xid: np.ndarray        # (m, N, p)


def _sweep(model: Model, prior: Prior) -> Iterator[_Chunk]:
    if model.p != prior.p:
        raise DimensionError(f"model p={model.p} but prior p={prior.p}")
    pts = prior.grid.points
    qv = prior.q(pts)
    keep = qv > Q_MIN_REL * float(np.max(qv))
    pts, w, qv = pts[keep], prior.grid.weights[keep], qv[keep]
    dq = prior.grad(pts)
    n = model.grid.size
    step = max(1, CHUNK // max(1, n * model.p))
    for s in range(0, pts.shape[0], step):
        t = pts[s:s + step]
        f = model.f(t)
        yield _Chunk(t, w[s:s + step], qv[s:s + step], dq[s:s + step], f, np.sqrt(f), model.xi_dot(t))


def _delta(c: _Chunk) -> np.ndarray:
    """Delta on a chunk: ``(m, N, p)``."""
    sq = np.sqrt(c.q)
    return (c.dq / (2 * sq)[:, None])[:, None, :] * c.xi[..., None] + sq[:, None, None] * c.xid


def delta_function(model: Model, prior: Prior, theta, x=None) -> np.ndarray:
    """Delta at the parameter(s) ``theta`` on the sample grid (or at points ``x``): ``(m, N, p)``.

    Vanishes identically outside the support of the prior.
    """
    t = model.thetas(theta)
    pts = model.grid.points if x is None else x
    q = prior.q(t)
    dq = prior.grad(t)
    inside = q > 0
    out = np.zeros((t.shape[0], pts.shape[0], model.p))
    if np.any(inside):
        ti = t[inside]
        xi = model.xi(ti, pts)
        sq = np.sqrt(q[inside])
        out[inside] = ((dq[inside] / (2 * sq)[:, None])[:, None, :] * xi[..., None]
                       + sq[:, None, None] * model.xi_dot(ti, pts))
    return out


@dataclass(frozen=True)
class InformationTerms:
    int_psi_grad: np.ndarray   # (p, s)  int grad psi dQ
    I_Q: np.ndarray            # (p, p)
    int_IP: np.ndarray         # (p, p)  int I_P dQ
    delta_norm: np.ndarray     # (p, p)  4 int int Delta (x) Delta
    cross_term: np.ndarray     # (p, p)  int grad q 1{q>0} (x) mu[xi_dot xi]
    prior_mass: float
    risk: np.ndarray | None = None       # (s, s)  Bayes risk of the statistic
    bias: np.ndarray | None = None       # (s,)    int E[S - psi] dQ
    key_lhs: np.ndarray | None = None    # (p, s)  2 int int Delta sqrt(q) xi (S - psi)


def information_terms(model: Model, prior: Prior, psi: Target | None = None,
                      stat: Statistic | None = None) -> InformationTerms:
    """All theta- and x-integrals the bounds need, in a single pass over the tensor grid.

    With a statistic, also the Bayes risk, the bias vector and (for bounded
    ``S`` and admissible ``psi``) the left side of the key equality.
    """
    p = model.p
    with_stat = stat is not None and psi is not None
    if with_stat and stat.dim != psi.s:
        raise DimensionError(f"statistic has {stat.dim} components, target has {psi.s}")
    key = with_stat and stat.bounded and _psi_ok(psi, prior)
    S = stat(model.grid.points) if with_stat else None
    s = psi.s if psi is not None else 1
    g = np.zeros((p, s))
    ip = np.zeros((p, p))
    dn = np.zeros((p, p))
    cross = np.zeros((p, p))
    mass = 0.0
    risk = np.zeros((s, s))
    bias = np.zeros(s)
    klhs = np.zeros((p, s))
    wx = model.grid.weights
    for c in _sweep(model, prior):
        m = c.theta.shape[0]
        a = c.xid * np.sqrt(wx)[None, :, None]
        fisher = 4.0 * np.matmul(a.transpose(0, 2, 1), a)
        ip += np.tensordot(c.wq * c.q, fisher, axes=1)
        d = _delta(c) * np.sqrt(c.wq[:, None, None] * wx[None, :, None])
        flat = d.reshape(m * wx.size, p)
        dn += 4.0 * flat.T @ flat
        orth = np.einsum("mni,mn->mi", c.xid, c.xi * wx)
        cross += (c.wq[:, None] * c.dq).T @ orth
        mass += float(c.wq @ c.q)
        if psi is not None:
            g += np.tensordot(c.wq * c.q, psi.gradient(c.theta), axes=1)
        if with_stat:
            wq = c.wq * c.q
            err = S[None, :, :] - psi(c.theta)[:, None, :]
            fw = c.f * wx[None, :]
            e = (err * np.sqrt(wq[:, None] * fw)[..., None]).reshape(-1, s)
            risk += e.T @ e
            bias += (wq @ fw) @ S - wq @ psi(c.theta)
            if key:
                wt = (c.wq * np.sqrt(c.q))[:, None] * c.xi * wx[None, :]
                klhs += 2.0 * (_delta(c) * wt[..., None]).reshape(-1, p).T @ err.reshape(-1, s)
    if not np.all(np.isfinite(ip)):
        raise IntegrabilityError("int I_P dQ is not finite")
    return InformationTerms(g, prior_information(prior), symmetrize(ip), symmetrize(dn), cross, mass,
                            symmetrize(risk) if with_stat else None, bias if with_stat else None,
                            klhs if key else None)


def _meta(model: Model, prior: Prior) -> dict:
    return {"model": model.describe(), "prior": prior.describe()}


# --- reports -----------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """A lower bound and every intermediate needed to reproduce it.

    Scalars for the one-dimensional bounds, arrays for the matrix bound.
    """

    kind: str
    bound: float | np.ndarray
    int_psi_prime_dQ: float | np.ndarray
    I_Q: float | np.ndarray
    int_IP_dQ: float | np.ndarray
    bias_term: float | np.ndarray | None = None
    residual_key_eq: float | None = None
    residual_delta_norm: float | None = None
    grid_meta: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    FIELDS = ("bound", "bias_term", "int_psi_prime_dQ", "I_Q", "int_IP_dQ",
              "residual_key_eq", "residual_delta_norm", "grid_meta")

    def recompute(self) -> float | np.ndarray:
        g = np.atleast_2d(self.int_psi_prime_dQ)
        info = np.atleast_2d(self.I_Q) + np.atleast_2d(self.int_IP_dQ)
        if self.kind == "vtm":
            inv, _ = pinv_sym(info)
            return g.T @ inv @ g
        out = float(g[0, 0] ** 2 / info[0, 0])
        if self.kind == "corollary":
            out += float(self.bias_term) ** 2
        return out

    def as_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in self.FIELDS:
            out[name] = getattr(self, name)
        out["diagnostics"] = self.diagnostics
        return out

    def to_json(self) -> str:
        return report.dumps(self.as_dict())

    def to_csv_row(self) -> dict:
        """Flat mapping for one CSV row; matrices and metadata are flattened to dotted keys."""
        return report.flatten({k: v for k, v in self.as_dict().items() if k != "diagnostics"})


@dataclass(frozen=True)
class CramerRao:
    bound: float
    variance: float
    gamma_prime: float
    fisher: float


def cramer_rao(model: Model, theta0, stat: Statistic, tol: float = 1e-9) -> CramerRao:
    """``(gamma_T'(theta0))^2 / I_P(theta0)`` for a scalar parameter, with ``Var(T) >= bound`` checked."""
    if model.p != 1 or stat.dim != 1:
        raise DimensionError("cramer_rao handles a scalar parameter and a scalar statistic")
    t = model.thetas(theta0)
    T = stat(model.grid.points)[:, 0]
    f = model.f(t)[0]
    xi = np.sqrt(f)
    xd = model.xi_dot(t)[0, :, 0]
    fisher = 4.0 * integrate(xd * xd, model.grid)
    if fisher <= 1e-14:
        raise SingularInformationError(f"I_P({t[0, 0]:g}) = {fisher:g}")
    gp = 2.0 * integrate(xd * xi * T, model.grid)
    mean = integrate(f * T, model.grid)
    var = integrate(f * (T - mean) ** 2, model.grid)
    bound = gp * gp / fisher
    if var < bound - tol * max(1.0, bound):
        raise ContractViolation(f"Var(T) = {var:.10g} below the Cramer-Rao bound {bound:.10g}")
    return CramerRao(float(bound), float(var), float(gp), float(fisher))


def van_trees_1d(model: Model, prior: Prior, psi: Target, stat: Statistic | None = None) -> BoundReport:
    """``(int psi' dQ)^2 / (I_Q + int I_P dQ)`` for ``p = s = 1``.

    When a bounded ``stat`` is given, the key-equality residual is reported too.
    """
    if model.p != 1 or psi.s != 1 or psi.p != 1:
        raise DimensionError("van_trees_1d needs p = s = 1; use van_trees_matrix")
    return _vt1_report(information_terms(model, prior, psi, stat), model, prior)


def _key_residual(terms: InformationTerms) -> float | None:
    if terms.key_lhs is None:
        return None
    return float(np.max(np.abs(terms.key_lhs - terms.int_psi_grad)))


def _vt1_report(terms: InformationTerms, model: Model, prior: Prior) -> BoundReport:
    g = float(terms.int_psi_grad[0, 0])
    iq = float(terms.I_Q[0, 0])
    ip = float(terms.int_IP[0, 0])
    diag = {"cross_term": float(terms.cross_term[0, 0]), "prior_mass": terms.prior_mass}
    if terms.risk is not None:
        diag["bayes_risk"] = float(terms.risk[0, 0])
    return BoundReport("vt1", g * g / (iq + ip), g, iq, ip, None, _key_residual(terms),
                       _delta_residual(terms), _meta(model, prior), diag)


def _delta_residual(terms: InformationTerms) -> float:
    return float(np.max(np.abs(terms.delta_norm - terms.I_Q - terms.int_IP)))


@dataclass(frozen=True)
class BayesRisk:
    """Bayes risk (scalar for ``s = 1``, else ``s x s``); ``se`` only in Monte Carlo mode."""

    value: float | np.ndarray
    se: float | np.ndarray | None
    mode: str
    draws: int | None = None


def bayes_risk(model: Model, prior: Prior, psi: Target, stat: Statistic, mode: str = "quadrature",
               seed: int | None = None, n_draws: int = 10_000, splits: int = 1) -> BayesRisk:
    """``int E_theta[(S - psi(theta)) (x) (S - psi(theta))] dQ(theta)``.

    In Monte Carlo mode ``splits > 1`` divides the draws across child seeds
    and merges the pieces by count-weighted mean and pooled standard error.
    """
    if mode == "monte-carlo" and splits > 1:
        if seed is None:
            raise ValueError("Monte Carlo mode needs an explicit seed")
        counts = [n_draws // splits + (k < n_draws % splits) for k in range(splits)]
        parts = [bayes_risk(model, prior, psi, stat, mode, sd, c)
                 for sd, c in zip(split_seeds(seed, splits), counts)]
        if psi.s == 1:
            mean, se = pooled_mean([r.value for r in parts], [r.se for r in parts], counts)
            return BayesRisk(mean, se, "monte-carlo", n_draws)
        w = np.asarray(counts, float) / n_draws
        mean = np.tensordot(w, np.stack([r.value for r in parts]), axes=1)
        se = np.sqrt(np.tensordot(w**2, np.stack([r.se for r in parts]) ** 2, axes=1))
        return BayesRisk(mean, se, "monte-carlo", n_draws)
    if stat.dim != psi.s:
        raise DimensionError(f"statistic has {stat.dim} components, target has {psi.s}")
    if mode == "quadrature":
        S = stat(model.grid.points)
        wx = model.grid.weights
        acc = np.zeros((psi.s, psi.s))
        for c in _sweep(model, prior):
            err = S[None, :, :] - psi(c.theta)[:, None, :]
            wt = np.sqrt((c.wq * c.q)[:, None] * c.f * wx[None, :])[..., None]
            flat = (err * wt).reshape(-1, psi.s)
            acc += flat.T @ flat
        acc = symmetrize(acc)
        return BayesRisk(float(acc[0, 0]) if psi.s == 1 else acc, None, "quadrature")
    if mode != "monte-carlo":
        raise ValueError(f"unknown mode {mode!r}")
    if seed is None:
        raise ValueError("Monte Carlo mode needs an explicit seed")
    if n_draws < MC_MIN_DRAWS:
        raise InsufficientDataError(f"Monte Carlo Bayes risk refused with N={n_draws} < {MC_MIN_DRAWS}")
    rng = make_rng(seed)
    thetas = prior.sample(rng, n_draws)
    xs = np.concatenate([model.sample(t, rng, 1) for t in thetas])
    err = stat(xs) - psi(thetas)
    outer = np.einsum("na,nb->nab", err, err)
    mean = outer.mean(axis=0)
    se = outer.std(axis=0, ddof=1) / math.sqrt(n_draws)
    if psi.s == 1:
        return BayesRisk(float(mean[0, 0]), float(se[0, 0]), "monte-carlo", n_draws)
    return BayesRisk(mean, se, "monte-carlo", n_draws)


def bias_vector(model: Model, prior: Prior, psi: Target, stat: Statistic) -> np.ndarray:
    """``int E_theta[S - psi(theta)] dQ(theta)``: shape ``(s,)``."""
    S = stat(model.grid.points)
    wx = model.grid.weights
    acc = np.zeros(psi.s)
    for c in _sweep(model, prior):
        acc += ((c.wq * c.q) @ (c.f * wx)) @ S - (c.wq * c.q) @ psi(c.theta)
    return acc


def van_trees_corollary(model: Model, prior: Prior, psi: Target, stat: Statistic) -> BoundReport:
    """``(int E_theta[S - psi] dQ)^2`` plus the one-dimensional van Trees bound."""
    if model.p != 1 or psi.s != 1 or psi.p != 1:
        raise DimensionError("van_trees_corollary needs p = s = 1")
    terms = information_terms(model, prior, psi, stat)
    base = _vt1_report(terms, model, prior)
    bias = float(terms.bias[0])
    return BoundReport("corollary", bias * bias + base.bound, base.int_psi_prime_dQ, base.I_Q,
                       base.int_IP_dQ, bias, base.residual_key_eq, base.residual_delta_norm,
                       base.grid_meta, base.diagnostics)


@dataclass(frozen=True)
class MatrixBound:
    block: np.ndarray
    schur_bound: np.ndarray
    risk: np.ndarray
    block_psd: object
    gap_psd: object
    pinv_used: bool
    ridge_bound: np.ndarray
    report: BoundReport


def van_trees_matrix(model: Model, prior: Prior, psi: Target, stat: Statistic,
                     psd_tol: float = 1e-7) -> MatrixBound:
    """Block matrix ``[[R, G^T], [G, I_Q + int I_P dQ]]`` and its Schur-complement bound ``G^T J^-1 G``."""
    terms = information_terms(model, prior, psi, stat)
    risk = terms.risk
    g = terms.int_psi_grad
    info = terms.I_Q + terms.int_IP
    s, p = psi.s, model.p
    block = np.zeros((s + p, s + p))
    block[:s, :s] = risk
    block[:s, s:] = g.T
    block[s:, :s] = g
    block[s:, s:] = info
    inv, cut = pinv_sym(info)
    schur = symmetrize(g.T @ inv @ g)
    ridge = symmetrize(g.T @ np.linalg.inv(info + 1e-10 * np.trace(info) * np.eye(p)) @ g)
    report = BoundReport("vtm", schur, g, terms.I_Q, terms.int_IP, terms.bias,
                         _key_residual(terms), _delta_residual(terms), _meta(model, prior),
                         {"pinv_used": cut, "cross_term_max": float(np.max(np.abs(terms.cross_term))),
                          "bayes_risk": risk})
    return MatrixBound(block, schur, risk, psd_check(block, psd_tol), psd_check(risk - schur, psd_tol),
                       cut, ridge, report)


# --- identity residuals --------------------------------------------------------------------------


def _psi_ok(psi: Target, prior: Prior) -> bool:
    return psi.bound is not None or prior.compact


def key_equality_sides(model: Model, prior: Prior, psi: Target, stat: Statistic) -> tuple[np.ndarray, np.ndarray]:
    """``(2 int int Delta sqrt(q) xi (S - psi)^T, int grad psi dQ)``, both ``(p, s)``."""
    if not stat.bounded:
        raise ContractViolation("the key equality needs a bounded statistic (use Statistic.clamped)")
    if not _psi_ok(psi, prior):
        raise ContractViolation("the key equality needs a bounded target (clamp psi) or a compact prior")
    S = stat(model.grid.points)
    wx = model.grid.weights
    lhs = np.zeros((model.p, psi.s))
    rhs = np.zeros((model.p, psi.s))
    for c in _sweep(model, prior):
        d = _delta(c)
        err = S[None, :, :] - psi(c.theta)[:, None, :]
        wt = (c.wq * np.sqrt(c.q))[:, None] * c.xi * wx[None, :]
        lhs += 2.0 * (d * wt[..., None]).reshape(-1, model.p).T @ err.reshape(-1, psi.s)
        rhs += np.tensordot(c.wq * c.q, psi.gradient(c.theta), axes=1)
    return lhs, rhs


def key_equality_residual(model: Model, prior: Prior, psi: Target, stat: Statistic,
                          clamp: float | None = None) -> float:
    """Max entry of ``|2 int int Delta sqrt(q) xi (S - psi) - int grad psi dQ|``.

    ``clamp`` truncates an unbounded ``S`` (and ``psi``) at that level; a
    ``RuntimeWarning`` is issued when truncation moves the Bayes risk by more
    than 1e-6.
    """
    if clamp is not None:
        stat, psi = _clamp_inputs(model, prior, psi, stat, clamp)
    lhs, rhs = key_equality_sides(model, prior, psi, stat)
    return float(np.max(np.abs(lhs - rhs)))


def _clamp_inputs(model, prior, psi, stat, level):
    new_stat = stat if stat.bounded else stat.clamped(level)
    new_psi = psi
    if psi.bound is None and not prior.compact:
        new_psi = Target(lambda t: np.clip(psi.func(t), -level, level),
                         lambda t: psi.gradient(t) * (np.abs(psi(t)) < level)[:, None, :],
                         psi.p, psi.s, f"clamp({psi.name},{level:g})", level)
    if new_stat is not stat or new_psi is not psi:
        before = np.atleast_2d(bayes_risk(model, prior, psi, stat).value)
        after = np.atleast_2d(bayes_risk(model, prior, new_psi, new_stat).value)
        shift = float(np.max(np.abs(after - before)))
        if shift > 1e-6:
            warnings.warn(f"clamping at {level:g} changes the Bayes risk by {shift:.3g}", RuntimeWarning,
                          stacklevel=3)
    return new_stat, new_psi


@dataclass(frozen=True)
class DeltaNormCheck:
    residual: float
    cross_term: float
    lhs: np.ndarray
    rhs: np.ndarray


def delta_norm_identity_residual(model: Model, prior: Prior) -> DeltaNormCheck:
    """``|4 int int Delta (x) Delta - I_Q - int I_P dQ|`` (max entry) and the vanishing cross term."""
    terms = information_terms(model, prior)
    rhs = terms.I_Q + terms.int_IP
    return DeltaNormCheck(_delta_residual(terms), float(np.max(np.abs(terms.cross_term))),
                          terms.delta_norm, rhs)


@dataclass(frozen=True)
class Field:
    """Scalar function on ``Theta`` with its gradient: ``value(t) -> (m,)``, ``grad(t) -> (m, p)``."""

    value: Callable
    grad: Callable
    name: str = "f"


def target_field(psi: Target, j: int = 0) -> Field:
    return Field(lambda t: psi(t)[:, j], lambda t: psi.gradient(t)[:, :, j], f"{psi.name}[{j}]")


def prior_field(prior: Prior) -> Field:
    return Field(prior.q, prior.grad, prior.name)


def constant_field(value: float, p: int) -> Field:
    return Field(lambda t: np.full(t.shape[0], float(value)), lambda t: np.zeros((t.shape[0], p)), "const")


def expectation_field(model: Model, stat: Statistic, j: int = 0) -> Field:
    """``theta -> E_theta[S_j]`` with partial derivatives ``2 int xi_dot_i xi S_j dmu``."""
    if not stat.bounded:
        raise ContractViolation("expectation_field needs a bounded statistic")
    S = stat(model.grid.points)[:, j]
    wx = model.grid.weights

    def value(t):
        return model.f(t) @ (wx * S)

    def grad(t):
        return 2.0 * np.einsum("mni,mn,n->mi", model.xi_dot(t), model.xi(t), wx * S)

    return Field(value, grad, f"E[{stat.name}]")


def ibp_zero_residual(f: Field, g: Field, grid, i: int) -> float:
    """``|int_{D and g != 0} (d_i f g + f d_i g)|`` over a grid covering the domain ``D``."""
    pts = grid.points
    gv = g.value(pts)
    mask = gv != 0
    integrand = np.zeros(pts.shape[0])
    tp = pts[mask]
    integrand[mask] = f.grad(tp)[:, i] * gv[mask] + f.value(tp) * g.grad(tp)[:, i]
    return abs(integrate(integrand, grid))
