"""Local asymptotic minimax (LAM) lower bounds for quadratic losses.

A prior ``H`` on the unit ball is shrunk to ``Q = theta0 + (c / sqrt n) H``;
applying the matrix van Trees inequality to ``n`` observations gives the
finite-sample covariance

    Gamma(c, n) = G^T I^{-1} G,
    G = int grad psi(theta0 + c h / sqrt n) dH(h),
    I = I_H / c^2 + int I_P(theta0 + c h / sqrt n) dH(h),

and the bound ``int l dN(0, Gamma) = trace(L Gamma)`` for ``l(v) = v^T L v``.
Letting ``n -> oo`` and then ``c -> oo`` yields ``grad psi^T I_P^{-1} grad psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import Target, identity_target
from .errors import (ConfigError, ContractViolation, DimensionError, DomainError, InsufficientDataError,
                     MisuseError, SingularInformationError)
from .model import Model, ParamDomain, Statistic, fisher_batch
from .numerics import eigendecompose_sym, make_rng, pinv_sym, psd_check, symmetrize
from .prior import CHUNK, Prior, default_base_prior, prior_information, scaled_prior

MC_MIN_DRAWS = 100
N_PER_C2 = 100
DEFAULT_RADIUS = 0.5
DEFAULT_G = 10


class QuadraticForm:
    """``l(v) = v^T L v`` for a symmetric PSD ``L``, with its eigen-decomposition cached."""

    def __init__(self, L, name: str | None = None, tol: float = 1e-12):
        L = symmetrize(np.atleast_2d(np.asarray(L, dtype=float)))
        if not psd_check(L, tol):
            raise ContractViolation("loss matrix is not positive semi-definite")
        self.L = L
        self.eigenvalues, self.eigenvectors = eigendecompose_sym(L)
        self.name = name or ("quad" if L.shape[0] > 1 else "v^2")

    @property
    def s(self) -> int:
        return self.L.shape[0]

    def __call__(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float).reshape(-1, self.s)
        return np.einsum("na,ab,nb->n", v, self.L, v)

    def spectral(self, v) -> np.ndarray:
        """``sum_k lambda_k (U_k^T v)^2``."""
        proj = np.asarray(v, dtype=float).reshape(-1, self.s) @ self.eigenvectors
        return proj**2 @ self.eigenvalues

    @classmethod
    def squared_norm(cls, s: int) -> "QuadraticForm":
        return cls(np.eye(s), "|v|^2" if s > 1 else "v^2")

    @classmethod
    def rank_one(cls, u) -> "QuadraticForm":
        u = np.asarray(u, dtype=float).ravel()
        return cls(np.outer(u, u), f"(u^T v)^2, u={u.tolist()}")


def gaussian_quadratic_integral(loss: QuadraticForm, gamma) -> float:
    """``int l dN(0, Gamma) = sum_k lambda_k U_k^T Gamma U_k``."""
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    if gamma.shape != loss.L.shape:
        raise DimensionError(f"Gamma has shape {gamma.shape}, loss has dimension {loss.s}")
    u = loss.eigenvectors
    return float(np.sum(loss.eigenvalues * np.einsum("ak,ab,bk->k", u, gamma, u)))


def gaussian_quadratic_integral_mc(loss: QuadraticForm, gamma, seed: int, n_draws: int = 100_000):
    """Monte Carlo estimate and standard error of ``int l dN(0, Gamma)``."""
    if n_draws < MC_MIN_DRAWS:
        raise InsufficientDataError(f"N={n_draws} < {MC_MIN_DRAWS}")
    gamma = symmetrize(np.atleast_2d(np.asarray(gamma, dtype=float)))
    rng = make_rng(seed)
    z = rng.multivariate_normal(np.zeros(loss.s), gamma, size=n_draws, method="eigh")
    vals = loss(z)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_draws))


@dataclass
class LamInstance:
    """Everything needed to evaluate the LAM bound at ``theta0``.

    ``radius`` is the half-width of the box neighbourhood ``N`` of ``theta0``
    on which ``psi`` and the model must be well behaved.  ``cells`` lists the
    ``(c, n)`` pairs; pairs with ``n < 100 c^2`` are rejected.
    """

    model: Model
    theta0: np.ndarray
    psi: Target | None = None
    base_prior: Prior | None = None
    loss: QuadraticForm | None = None
    radius: float = DEFAULT_RADIUS
    c_grid: Sequence[float] = (1.0, 2.0, 5.0)
    n_grid: Sequence[int] = (2_500, 10_000)
    prior_nodes: int | None = None
    _I_H: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = self.model.p
        self.theta0 = np.atleast_1d(np.asarray(self.theta0, dtype=float))
        if self.theta0.size != p:
            raise DimensionError(f"theta0 has {self.theta0.size} entries, model p = {p}")
        if self.psi is None:
            self.psi = identity_target(p)
        if self.psi.p != p:
            raise DimensionError("target and model dimensions disagree")
        if self.base_prior is None:
            self.base_prior = default_base_prior(p, self.prior_nodes or (64 if p == 1 else 24))
        if self.loss is None:
            self.loss = QuadraticForm.squared_norm(self.psi.s)
        if self.loss.s != self.psi.s:
            raise DimensionError("loss and target dimensions disagree")
        lo, hi = self.neighborhood.lower, self.neighborhood.upper
        if not (np.all(self.model.domain.contains(lo[None])) and np.all(self.model.domain.contains(hi[None]))):
            raise DomainError(f"neighbourhood of radius {self.radius:g} around {self.theta0.tolist()} "
                              "leaves the parameter set")
        self._I_H = prior_information(self.base_prior)
        if not self.cells():
            raise ConfigError(f"no (c, n) pair satisfies n >= {N_PER_C2} c^2")

    @property
    def neighborhood(self) -> ParamDomain:
        return ParamDomain.box(self.theta0 - self.radius, self.theta0 + self.radius)

    @property
    def I_H(self) -> np.ndarray:
        return self._I_H

    def cells(self) -> list[tuple[float, int]]:
        return [(float(c), int(n)) for c in self.c_grid for n in self.n_grid if n >= N_PER_C2 * c * c]

    def shrunk_prior(self, c: float, n: int) -> Prior:
        try:
            return scaled_prior(self.base_prior, self.theta0, c / math.sqrt(n), self.neighborhood)
        except DomainError as exc:
            raise DomainError(f"c/sqrt(n) = {c / math.sqrt(n):.3g} too large for the neighbourhood; "
                              f"n is not large enough ({exc})") from None


def _prior_nodes(prior: Prior):
    pts = prior.grid.points
    q = prior.q(pts)
    keep = q > 0
    return pts[keep], prior.grid.weights[keep] * q[keep]


def g_matrix(inst: LamInstance, c: float, n: int) -> np.ndarray:
    """``int grad psi(theta0 + c h / sqrt n) dH(h)``: ``(p, s)``."""
    pts, w = _prior_nodes(inst.shrunk_prior(c, n))
    return np.tensordot(w, inst.psi.gradient(pts), axes=1)


def i_matrix(inst: LamInstance, c: float, n: int) -> np.ndarray:
    """``I_H / c^2 + int I_P(theta0 + c h / sqrt n) dH(h)``: ``(p, p)``."""
    pts, w = _prior_nodes(inst.shrunk_prior(c, n))
    step = max(1, CHUNK // max(1, inst.model.grid.size * inst.model.p))
    avg = np.zeros((inst.model.p, inst.model.p))
    for s in range(0, pts.shape[0], step):
        avg += np.tensordot(w[s:s + step], fisher_batch(inst.model, pts[s:s + step]), axes=1)
    return symmetrize(inst.I_H / c**2 + avg)


@dataclass(frozen=True)
class GammaRecord:
    c: float
    n: int
    G: np.ndarray
    I: np.ndarray
    Gamma: np.ndarray
    pinv_used: bool = False

    def recompute(self) -> np.ndarray:
        inv, _ = pinv_sym(self.I)
        return symmetrize(self.G.T @ inv @ self.G)


def gamma_matrix(inst: LamInstance, c: float, n: int, allow_pinv: bool = False) -> GammaRecord:
    G = g_matrix(inst, c, n)
    I = i_matrix(inst, c, n)
    inv, used = pinv_sym(I)
    if used and not allow_pinv:
        raise SingularInformationError(f"I(theta0, c={c:g}, n={n}) is singular")
    return GammaRecord(c, n, G, I, symmetrize(G.T @ inv @ G), used)


@dataclass(frozen=True)
class LamTable:
    rows: list[dict]           # one per (c, n): c, n, bound_finite, Gamma
    limit: float
    limit_gamma: np.ndarray | None


def limit_gamma(inst: LamInstance, kernel_tol: float = 1e-9):
    """``grad psi^T I_P(theta0)^{-1} grad psi``, or ``None`` when ``I_P(theta0)`` is singular."""
    fisher = symmetrize(fisher_batch(inst.model, inst.theta0[None])[0])
    vals, _ = eigendecompose_sym(fisher)
    if vals[-1] <= kernel_tol * max(1.0, vals[0]):
        return None, fisher
    grad = inst.psi.gradient(inst.theta0[None])[0]
    return symmetrize(grad.T @ np.linalg.solve(fisher, grad)), fisher


def limit_bound(inst: LamInstance, kernel_tol: float = 1e-9) -> float:
    """Limit of the LAM bound; ``inf`` when the loss sees a direction the information cannot resolve."""
    gam, fisher = limit_gamma(inst, kernel_tol)
    if gam is not None:
        return gaussian_quadratic_integral(inst.loss, gam)
    vals, vecs = eigendecompose_sym(fisher)
    kernel = vecs[:, vals <= kernel_tol * max(1.0, vals[0])]
    grad = inst.psi.gradient(inst.theta0[None])[0]
    seen = inst.loss.L @ grad.T @ kernel
    if np.max(np.abs(seen)) > kernel_tol:
        return math.inf
    inv, _ = pinv_sym(fisher)
    return gaussian_quadratic_integral(inst.loss, grad.T @ inv @ grad)


def lam_bound(inst: LamInstance) -> LamTable:
    rows = []
    for c, n in inst.cells():
        rec = gamma_matrix(inst, c, n)
        rows.append({"c": c, "n": n, "bound_finite": gaussian_quadratic_integral(inst.loss, rec.Gamma),
                     "Gamma": rec.Gamma})
    gam, _ = limit_gamma(inst)
    return LamTable(rows, limit_bound(inst), gam)


@dataclass(frozen=True)
class MinimaxRisk:
    sup: float
    argmax: np.ndarray
    se: float
    thetas: np.ndarray
    risks: np.ndarray
    ses: np.ndarray


def ball_grid(theta0, radius: float, G: int = DEFAULT_G) -> np.ndarray:
    """Centre plus ``G`` points on each side along every axis: ``2 p G + 1`` rows."""
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    p = theta0.size
    steps = radius * np.arange(1, G + 1) / G
    pts = [theta0]
    for i in range(p):
        for sgn in (-1.0, 1.0):
            for st in steps:
                t = theta0.copy()
                t[i] += sgn * st
                pts.append(t)
    return np.array(pts)


def local_minimax_risk(inst: LamInstance, c: float, n: int, stat: Statistic, seed: int,
                       n_draws: int = 20_000, G: int = DEFAULT_G) -> MinimaxRisk:
    """Max over a grid of the ball ``|theta - theta0| <= c / sqrt n`` of the Monte Carlo normalized risk.

    Every grid point reuses the same seed (common random numbers), so the
    comparison between points is not blurred by independent noise.
    """
    if n_draws < MC_MIN_DRAWS:
        raise InsufficientDataError(f"local minimax risk refused with N={n_draws} < {MC_MIN_DRAWS}")
    if stat.dim != inst.psi.s:
        raise DimensionError("statistic and target dimensions disagree")
    thetas = ball_grid(inst.theta0, c / math.sqrt(n), G)
    risks = np.empty(len(thetas))
    ses = np.empty(len(thetas))
    rootn = math.sqrt(n)
    for k, t in enumerate(thetas):
        rng = make_rng(seed)
        x = inst.model.sample(t, rng, n_draws * n).reshape(n_draws, -1)
        err = rootn * (stat(x) - inst.psi(t[None]))
        loss = inst.loss(err)
        risks[k] = loss.mean()
        ses[k] = loss.std(ddof=1) / math.sqrt(n_draws)
    k = int(np.argmax(risks))
    return MinimaxRisk(float(risks[k]), thetas[k], float(ses[k]), thetas, risks, ses)


LAM_CSV_COLUMNS = ("c", "n", "theta_argmax", "risk", "se", "bound_finite", "bound_limit", "loss_id", "seed")


def lam_experiment(inst: LamInstance, stat: Statistic, seed: int, n_draws: int = 20_000,
                   G: int = DEFAULT_G) -> list[dict]:
    """Long-format rows (one per ``(c, n)`` cell) comparing MC local minimax risk with the bounds."""
    table = lam_bound(inst)
    rows = []
    for row in table.rows:
        mm = local_minimax_risk(inst, row["c"], row["n"], stat, seed, n_draws, G)
        out = {"c": row["c"], "n": row["n"]}
        for i, v in enumerate(mm.argmax):
            out[f"theta_argmax_{i + 1}"] = float(v)
        out.update({"risk": mm.sup, "se": mm.se, "bound_finite": row["bound_finite"],
                    "bound_limit": table.limit, "loss_id": inst.loss.name, "seed": int(seed)})
        rows.append(out)
    return rows


@dataclass(frozen=True)
class ProbeTable:
    direction: np.ndarray
    c: np.ndarray
    n: np.ndarray
    bounds: np.ndarray
    closed_form: np.ndarray     # c^2 / (U^T I_H U)

    def ratios(self) -> np.ndarray:
        return self.bounds[1:] / self.bounds[:-1]


def singular_probe(inst: LamInstance, direction, c_values: Sequence[float] = (2.5, 5.0, 10.0, 20.0),
                   n: int | None = None, threshold: float | None = None, kernel_tol: float = 1e-8) -> ProbeTable:
    """LAM bounds for ``l(v) = (U^T v)^2`` with ``U`` in the kernel of ``I_P(theta0)``.

    Bounds must increase strictly with ``c``; with ``threshold`` they must
    also reach it at the largest ``c``.  ``n`` defaults to ``100 c^2`` per row.
    """
    u = np.asarray(direction, dtype=float).ravel()
    if u.size != inst.model.p or inst.psi.s != inst.model.p:
        raise DimensionError("direction must live in R^p with s = p")
    u = u / np.linalg.norm(u)
    fisher = symmetrize(fisher_batch(inst.model, inst.theta0[None])[0])
    leak = float(np.linalg.norm(fisher @ u))
    if leak > kernel_tol:
        raise MisuseError(f"|I_P(theta0) U| = {leak:.3g}: U is not in the kernel of the Fisher information")
    loss = QuadraticForm.rank_one(u)
    cs = np.asarray(c_values, dtype=float)
    ns = np.array([n if n is not None else int(math.ceil(N_PER_C2 * c * c)) for c in cs])
    bounds = np.array([gaussian_quadratic_integral(loss, gamma_matrix(inst, c, int(m)).Gamma)
                       for c, m in zip(cs, ns)])
    if np.any(np.diff(bounds) <= 0):
        raise ContractViolation(f"probe bounds are not strictly increasing in c: {bounds.tolist()}")
    if threshold is not None and bounds[-1] < threshold:
        raise ContractViolation(f"probe bound {bounds[-1]:.4g} at c={cs[-1]:g} stays below {threshold:g}")
    closed = cs**2 / float(u @ inst.I_H @ u)
    return ProbeTable(u, cs, ns, bounds, closed)
