"""The location model on ``Theta x X`` that turns the van Trees bound into a Cramer-Rao bound.

For a one-dimensional model ``(f_theta)`` and prior density ``q`` whose
support stays ``delta`` away from the boundary of ``Theta``, the shifted
measures

    dM_alpha(theta, x) = q(theta + alpha) f_{theta + alpha}(x) dtheta dmu(x),   |alpha| < delta,

form a one-parameter model.  Its L2 derivative at ``alpha = 0`` is the
field ``Delta`` of :mod:`vantrees.bounds`, so its Fisher information is
``I_Q + int I_P dQ``.  The Cramer-Rao bound for ``J(x, theta) = S(x) - psi(theta)``
in this model is then exactly the bias-corrected van Trees bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import Target, delta_function, information_terms
from .errors import ContractViolation, DimensionError, DomainError
from .model import Model, Statistic
from .numerics import Grid1D, RateFit, fit_rate
from .prior import Prior

NORM_TOL = 1e-8
GAMMA_TOL = 1e-8
PANEL = 0.25
ORDER = 20


@dataclass(frozen=True)
class JointLocationModel:
    model: Model
    prior: Prior
    delta: float
    support: tuple[float, float]     # effective (truncated) support of q
    normalization: dict              # alpha -> |mass - 1|

    def theta_grid(self, alphas=(0.0,)) -> Grid1D:
        """Quadrature over ``theta`` with breakpoints at ``edge - alpha`` for every ``alpha`` given.

        ``theta -> q(theta + alpha)`` may have kinks at the support edges; putting
        them on panel boundaries keeps the tensor quadrature at machine accuracy.
        """
        lo, hi = self.support
        a, b = lo - self.delta, hi + self.delta
        breaks = [a, b]
        for al in alphas:
            breaks += [lo - al, hi - al]
        return Grid1D.panels(a, b, PANEL, ORDER, [t for t in breaks if a <= t <= b])

    def density(self, alpha: float, grid: Grid1D | None = None) -> np.ndarray:
        """``q(theta + alpha) f_{theta + alpha}(x)`` on (theta grid) x (sample grid): ``(m, N)``."""
        self._check_alpha(alpha)
        grid = self.theta_grid((alpha,)) if grid is None else grid
        t = grid.points + alpha
        q = self.prior.q(t)
        out = np.zeros((t.shape[0], self.model.grid.size))
        pos = (q > 0) & self._inside(t)
        if np.any(pos):
            out[pos] = q[pos, None] * self.model.f(t[pos])
        return out

    def mass(self, alpha: float) -> float:
        grid = self.theta_grid((alpha,))
        return float(grid.weights @ self.density(alpha, grid) @ self.model.grid.weights)

    def _inside(self, t: np.ndarray) -> np.ndarray:
        # truncation of non-compact priors
        return (t[:, 0] >= self.support[0]) & (t[:, 0] <= self.support[1])

    def delta_field(self, grid: Grid1D) -> np.ndarray:
        """``Delta`` on (theta grid) x (sample grid), zero outside the effective support: ``(m, N)``."""
        out = np.zeros((grid.size, self.model.grid.size))
        ins = self._inside(grid.points)
        if np.any(ins):
            out[ins] = delta_function(self.model, self.prior, grid.points[ins])[..., 0]
        return out

    def _check_alpha(self, alpha: float):
        if not abs(alpha) < self.delta:
            raise DomainError(f"|alpha| = {abs(alpha):g} is not below the margin delta = {self.delta:g}")


def _effective_support(prior: Prior) -> tuple[float, float]:
    lo, hi = float(prior.support_lower[0]), float(prior.support_upper[0])
    a, b = prior.grid.meta.get("interval", (prior.grid.nodes[0], prior.grid.nodes[-1]))
    return (lo if math.isfinite(lo) else float(a), hi if math.isfinite(hi) else float(b))


def build_joint(model: Model, prior: Prior, delta: float | None = None) -> JointLocationModel:
    """Assemble ``M_alpha``; ``delta`` defaults to half the gap between the support and the boundary."""
    if model.p != 1 or prior.p != 1:
        raise DimensionError("the joint location model is one-dimensional")
    lo, hi = _effective_support(prior)
    dlo, dhi = float(model.domain.lower[0]), float(model.domain.upper[0])
    gap = min(lo - dlo, dhi - hi)
    if delta is None:
        delta = 0.5 * gap if math.isfinite(gap) else 1.0
    if not delta > 0:
        raise DomainError(f"margin delta must be positive, got {delta}")
    nodes = prior.grid.nodes[prior.q(prior.grid.points) > 0]
    bad = nodes[(nodes - delta <= dlo) | (nodes + delta >= dhi)]
    if lo - delta < dlo or hi + delta > dhi or bad.size:
        shown = ", ".join(f"{t:.6g}" for t in bad[:8]) + (" ..." if bad.size > 8 else "")
        raise DomainError(f"support [{lo:g}, {hi:g}] is not delta={delta:g} away from the boundary "
                          f"({dlo:g}, {dhi:g}); offending theta nodes: {shown or 'support edges'}")
    joint = JointLocationModel(model, prior, float(delta), (lo, hi), {})
    for al in (-delta / 2, 0.0, delta / 2):
        err = abs(joint.mass(al) - 1.0)
        joint.normalization[al] = err
        if err > NORM_TOL:
            raise ContractViolation(f"M_alpha at alpha={al:g} has mass 1 + {err:.3g}")
    return joint


def _tensor_norm(values: np.ndarray, grid: Grid1D, model: Model) -> float:
    return math.sqrt(max(0.0, float(grid.weights @ (values * values) @ model.grid.weights)))


def verify_delta_is_joint_derivative(joint: JointLocationModel, h_sequence=None,
                                     threshold: float = 1.3) -> RateFit:
    """Fit the decay of ``|| sqrt(dM_h) - sqrt(dM_0) - h Delta ||`` in ``h``.

    A slope above ``threshold`` certifies that ``Delta`` is the L2 derivative.
    """
    if h_sequence is None:
        h_sequence = [0.2 * joint.delta * 0.5**k for k in range(6)]
    pairs = []
    for h in h_sequence:
        grid = joint.theta_grid((0.0, h))
        d = joint.delta_field(grid)
        r = np.sqrt(joint.density(h, grid)) - np.sqrt(joint.density(0.0, grid)) - h * d
        pairs.append((h, _tensor_norm(r, grid, joint.model)))
    return fit_rate(pairs, noise_floor=1e-14, threshold=threshold)


def _require_bounded(joint: JointLocationModel, stat: Statistic, psi: Target):
    if not stat.bounded:
        raise ContractViolation("gamma_J needs a bounded statistic")
    if psi.bound is None and not joint.prior.compact:
        raise ContractViolation("gamma_J needs a bounded target or a compact prior")


def gamma_J(joint: JointLocationModel, alpha: float, stat: Statistic, psi: Target,
            check_tol: float = GAMMA_TOL) -> float:
    """``E_{M_alpha}[S(x) - psi(theta)]`` by tensor quadrature.

    Cross-checked against ``int E_theta[S] dQ - int psi(theta - alpha) dQ(theta)``.
    """
    _require_bounded(joint, stat, psi)
    grid = joint.theta_grid((alpha,))
    dens = joint.density(alpha, grid)
    S = stat(joint.model.grid.points)[:, 0]
    wx = joint.model.grid.weights
    val = float(grid.weights @ dens @ (wx * S)) - float(grid.weights @ (dens @ wx * psi(grid.points)[:, 0]))
    closed = _gamma_closed(joint, alpha, S, psi)
    if abs(val - closed) > check_tol:
        raise ContractViolation(f"gamma_J({alpha:g}) = {val:.12g} disagrees with the closed form {closed:.12g}")
    return val


def _gamma_closed(joint: JointLocationModel, alpha: float, S: np.ndarray, psi: Target) -> float:
    grid = joint.theta_grid((0.0, -alpha))
    t = grid.points
    q = joint.prior.q(t) * joint._inside(t)
    pos = q > 0
    es = np.zeros(t.shape[0])
    es[pos] = joint.model.f(t[pos]) @ (joint.model.grid.weights * S)
    return float(grid.weights @ (q * es)) - float(grid.weights @ (q * psi(t - alpha)[:, 0]))


@dataclass(frozen=True)
class JointCramerRao:
    """Side-by-side view of the van Trees bound and the Cramer-Rao bound of ``M_alpha`` at 0."""

    # 4 || d/dalpha sqrt(dM_alpha) ||^2 by central differences at steps h and h/2, combined
    # as 2 F(h/2) - F(h) because a kink of sqrt(q) at the support edge leaves an O(h) error
    fisher_fd: float
    fisher_delta: float        # 4 || Delta ||^2
    information: float         # I_Q + int I_P dQ
    dgamma_fd: float           # d gamma_J / d alpha at 0, central differences
    int_psi_prime_dQ: float
    bias: float                # gamma_J(0)
    second_moment: float       # E_{M_0}[J^2], the Bayes risk
    cr_bound: float            # bias^2 + dgamma^2 / fisher_fd
    corollary_bound: float     # bias^2 + (int psi' dQ)^2 / information

    @property
    def gap(self) -> float:
        return abs(self.cr_bound - self.corollary_bound)


def _fd_fisher(joint: JointLocationModel, h: float) -> float:
    grid = joint.theta_grid((0.0, h, -h))
    ddm = (np.sqrt(joint.density(h, grid)) - np.sqrt(joint.density(-h, grid))) / (2 * h)
    return 4.0 * _tensor_norm(ddm, grid, joint.model) ** 2


def van_trees_as_cramer_rao(joint: JointLocationModel, stat: Statistic, psi: Target,
                            h_fisher: float | None = None, h_gamma: float | None = None) -> JointCramerRao:
    _require_bounded(joint, stat, psi)
    model, prior = joint.model, joint.prior
    hf = 1e-4 * joint.delta if h_fisher is None else h_fisher
    hg = 1e-3 * joint.delta if h_gamma is None else h_gamma

    fisher_fd = 2.0 * _fd_fisher(joint, hf / 2) - _fd_fisher(joint, hf)
    grid = joint.theta_grid((0.0,))
    d = joint.delta_field(grid)
    fisher_delta = 4.0 * _tensor_norm(d, grid, model) ** 2

    terms = information_terms(model, prior, psi, stat)
    info = float(terms.I_Q[0, 0] + terms.int_IP[0, 0])
    g = float(terms.int_psi_grad[0, 0])
    dgamma = (gamma_J(joint, hg, stat, psi) - gamma_J(joint, -hg, stat, psi)) / (2 * hg)
    bias = gamma_J(joint, 0.0, stat, psi)

    grid0 = joint.theta_grid((0.0,))
    dens = joint.density(0.0, grid0)
    S = stat(model.grid.points)[:, 0]
    J = S[None, :] - psi(grid0.points)[:, 0][:, None]
    second = float(grid0.weights @ (dens * J * J) @ model.grid.weights)

    return JointCramerRao(fisher_fd, fisher_delta, info, dgamma, g, bias, second,
                          bias**2 + dgamma**2 / fisher_fd, bias**2 + g * g / info)
