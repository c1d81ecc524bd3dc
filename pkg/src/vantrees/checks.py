"""The invariant suite behind ``vantrees check-all``.

Each check yields one row: name, pass/fail, measured value, threshold, the
relation between them, and an anchor naming the mathematical statement it
exercises.  Failures are rows, never exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bounds as B, families as F, joint as J, lam as L, model as M, prior as P, report
from .config import RunConfig, build_prior
from .errors import ConfigError, VanTreesError
from .numerics import (Grid1D, GridP, eigendecompose_sym, integrate, make_rng, psd_check,
                       split_seeds)

NOISE_FLOOR = 1e-13

DEFAULT_TOLERANCES = {
    "integrate_linearity": 1e-12,
    "eigen_reconstruction": 1e-10,
    "model_normalization": 1e-8,
    "score_fd_agreement": 1e-5,
    "fisher_psd": 1e-9,
    "fisher_oracles": 1e-6,
    "expectation_derivative": 1e-5,
    "product_scaling": 1e-8,
    "dqm_slope_all": 1.0,
    "dqm_slope_smooth": 1.9,
    "dqm_slope_triangular": 1.3,
    "score_orthogonality": 1e-9,
    "prior_psd": 1e-10,
    "prior_oracles": 1e-8,
    "prior_scaling": 1e-6,
    "prior_translation": 1e-10,
    "prior_normalization": 1e-10,
    "boundary_vanish": 1e-8,
    "vt1_dominance": 1e-6,
    "corollary_dominance": 1e-6,
    "conjugate_equality": 1e-6,
    "vtm_block_psd": 1e-7,
    "vtm_gap_psd": 1e-7,
    "vtm_schur_value": 1e-6,
    "schur_1d_consistency": 1e-12,
    "scale_equivariance": 1e-10,
    "key_equality": 1e-5,
    "delta_norm_identity": 1e-5,
    "delta_cross_term": 1e-6,
    "ibp_zero": 1e-6,
    "joint_normalization": 1e-8,
    "joint_fisher_chain": 1e-5,
    "joint_derivative_rate": 1.3,
    "joint_gamma_derivative": 1e-5,
    "joint_cr_identification": 1e-5,
    "lam_prior_scaling": 1e-6,
    "lam_gamma_exact": 1e-8,
    "lam_monotone": 1e-9,
    "lam_limit": 1e-8,
    "lam_gaussian_integral": 4.0,
    "lam_efficiency": 3.0,
    "lam_dominance": 3.0,
    "lam_singular_probe": 0.1,
    "psd_symmetry": 0.0,
    "rng_reproducible": 0.0,
    "prior_positive_definite": 0.0,
    "corollary_above_vt1": 0.0,
    "residual_convergence": 0.0,
    "determinism": 0.0,
    "anchors_present": 0.0,
}


@dataclass(frozen=True)
class CheckRow:
    check: str
    passed: bool
    value: float
    threshold: float
    relation: str
    anchor: str

    def as_list(self) -> list:
        return [self.check, "pass" if self.passed else "fail", self.value, self.threshold, self.relation,
                self.anchor]


@dataclass(frozen=True)
class CheckSuiteReport:
    rows: list[CheckRow]

    HEADER = ("check", "status", "value", "threshold", "relation", "anchor")

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list[CheckRow]:
        return [r for r in self.rows if not r.passed]

    def to_csv(self) -> str:
        return report.csv_text(self.HEADER, (r.as_list() for r in self.rows))

    def as_dict(self) -> dict:
        return {"passed": self.passed, "rows": [dict(zip(self.HEADER, r.as_list())) for r in self.rows]}


class _Suite:
    def __init__(self, tolerances: dict):
        self.tol = dict(DEFAULT_TOLERANCES)
        unknown = sorted(set(tolerances) - set(self.tol))
        if unknown:
            raise ConfigError(f"unknown check tolerance(s): {', '.join(unknown)}")
        self.tol.update({k: float(v) for k, v in tolerances.items()})
        self.rows: list[CheckRow] = []

    def run(self, name: str, anchor: str, relation: str, fn: Callable[[], float], slack: bool = False):
        """``relation`` compares the measured value with the tolerance.

        With ``slack`` the tolerance is an allowed shortfall: the row passes when
        ``value >= -tol``.
        """
        thr = -self.tol[name] if slack else self.tol[name]
        try:
            value = float(fn())
            ok = {"<=": value <= thr, ">=": value >= thr, ">": value > thr, "<": value < thr}[relation]
            ok = ok and not math.isnan(value)
        except (VanTreesError, ArithmeticError, ValueError) as exc:
            value, ok = math.nan, False
            anchor = f"{anchor} [error: {type(exc).__name__}: {exc}]"
        self.rows.append(CheckRow(name, bool(ok), value, thr, relation, anchor))


def _converged(coarse: float, fine: float) -> bool:
    return fine < coarse or fine <= NOISE_FLOOR


def check_all(cfg: RunConfig) -> CheckSuiteReport:
    if cfg.seed is None:
        raise ConfigError("check-all needs a seed")
    res = float(cfg.checks.get("resolution", 1.0))
    if not res > 0:
        raise ConfigError("checks.resolution must be positive")
    s = _Suite(cfg.checks.get("tolerances", {}))
    seeds = split_seeds(cfg.seed, 8)
    nodes = max(8, int(round(64 * res)))
    panel = 0.5 / res

    gauss = F.gaussian_location(theta_range=(-10.0, 10.0), panel=panel)
    bern = F.bernoulli()
    expo = F.exponential_rate()
    tri = F.triangular_location()
    mlv = F.gaussian_mean_logvar()
    g2 = F.gaussian_location_nd(2, theta_range=[(-1.0, 1.0)] * 2, panel=4 * panel)
    smooth = [(gauss, [0.0, 1.3]), (bern, [0.3, 0.5]), (expo, [0.7, 2.0])]
    every = smooth + [(tri, [0.2]), (mlv, [[0.5, 0.2]]), (g2, [[0.3, -0.4]])]

    bump = P.quartic_bump(0.0, 1.0, M.ParamDomain.real_space(1), nodes)
    gprior = P.gaussian_prior(0.0, 1.0, nodes)
    bump2 = P.product_prior([P.quartic_bump(0.0, 1.0, M.ParamDomain.real_space(1), max(8, nodes // 2))] * 2)
    psi_c = B.clamped_identity(1)
    ind = M.indicator_statistic(0.0)
    quadrant = M.Statistic(lambda x: (x[:, :2] > 0).astype(float), bound=1.0, dim=2, name="1{x>0}")

    # --- numerics -----------------------------------------------------------------------
    def linearity():
        rng = make_rng(seeds[0])
        grid = Grid1D.gauss_legendre(-1.0, 2.0, 24)
        f, g = rng.standard_normal((2, grid.size))
        a, b = rng.standard_normal(2)
        lhs = integrate(a * f + b * g, grid)
        rhs = a * integrate(f, grid) + b * integrate(g, grid)
        return abs(lhs - rhs) / max(1.0, abs(lhs))
    s.run("integrate_linearity", "linearity of the quadrature functional", "<=", linearity)

    def reconstruction():
        a = make_rng(seeds[0]).standard_normal((6, 6))
        m = a + a.T
        vals, vecs = eigendecompose_sym(m)
        return np.max(np.abs((vecs * vals) @ vecs.T - m)) / np.max(np.abs(m))
    s.run("eigen_reconstruction", "spectral decomposition of a symmetric matrix", "<=", reconstruction)

    def psd_sign():
        tiny = 1e-12 * np.array([[1.0, 0.5], [0.5, -2.0]])
        big = np.diag([1.0, -1e-3])
        both_tiny = bool(psd_check(tiny, 1e-8)) and bool(psd_check(-tiny, 1e-8))
        both_big = bool(psd_check(big, 1e-8)) and bool(psd_check(-big, 1e-8))
        return 0.0 if both_tiny and not both_big else 1.0
    s.run("psd_symmetry", "a matrix and its negative are both PSD only when negligible", "<=", psd_sign)

    def rng_repro():
        a = make_rng(seeds[1]).standard_normal(1000)
        b = make_rng(seeds[1]).standard_normal(1000)
        return float(np.max(np.abs(a - b)))
    s.run("rng_reproducible", "seeded random streams are bit-identical", "<=", rng_repro)

    # --- model --------------------------------------------------------------------------
    s.run("model_normalization", "root densities are unit vectors of L2(mu)", "<=",
          lambda: max(M.normalization_error(m, t) for m, ts in every for t in ts))
    s.run("score_fd_agreement", "analytic score versus difference quotient of the root density", "<=",
          lambda: max(M.l2_partial_derivative(m, t, i).fd_distance
                      for m, ts in smooth + [(mlv, [[0.5, 0.2]])] for t in ts for i in range(m.p)))

    def fisher_psd():
        worst = 0.0
        for m, ts in every:
            for t in ts:
                r = psd_check(M.fisher_information(m, t), 0.0)
                worst = min(worst, r.min_eigenvalue / max(1.0, abs(r.max_eigenvalue)))
        return -worst
    s.run("fisher_psd", "Fisher information is symmetric positive semi-definite", "<=", fisher_psd)

    def fisher_oracles():
        errs = [abs(M.fisher_information(gauss, 0.4)[0, 0] - 1.0),
                abs(M.fisher_information(bern, 0.5)[0, 0] - 4.0),
                abs(M.fisher_information(expo, 2.0)[0, 0] - 0.25),
                np.max(np.abs(M.fisher_information(g2, [0.3, -0.4]) - np.eye(2)))]
        return max(errs)
    s.run("fisher_oracles", "closed-form Fisher information of Gaussian, Bernoulli, exponential families",
          "<=", fisher_oracles)

    def expectation_derivative():
        gaps = []
        for m, t, stat in ((gauss, 0.0, ind), (bern, 0.3, M.Statistic(lambda x: x, bound=1.0)),
                           (expo, 2.0, M.indicator_statistic(0.5))):
            v = M.gamma_derivative(m, t, stat, 0, check_tol=None)
            h = float(M.default_step(t))
            fd = (m.expectation(t + h, stat)[0, 0] - m.expectation(t - h, stat)[0, 0]) / (2 * h)
            gaps.append(abs(v - fd))
        return max(gaps)
    s.run("expectation_derivative", "derivative of theta -> E_theta[T] as 2 int xi_dot xi T dmu", "<=", expectation_derivative)

    def product():
        errs = []
        for n, t in ((2, 0.5), (3, 0.3)):
            pm = M.product_model(bern, n)
            exact = n / (t * (1 - t))
            errs.append(abs(M.fisher_information(pm, t)[0, 0] - exact) / exact)
        return max(errs)
    s.run("product_scaling", "Fisher information of n independent copies is n I_P", "<=", product)

    def slopes(models):
        return min(M.dqm_certify(m, t, i).slope for m, ts in models for t in ts
                   for i in range(m.p))
    s.run("dqm_slope_all", "L2 differentiability of every built-in family (remainder o(h))", ">",
          lambda: slopes(every))
    s.run("dqm_slope_smooth", "quadratic remainder of smooth families", ">=", lambda: slopes(smooth))
    s.run("dqm_slope_triangular", "L2 differentiability without pointwise smoothness in theta", ">",
          lambda: slopes([(tri, [0.0, 0.3])]))
    s.run("score_orthogonality", "int xi_dot xi dmu = 0 (score has mean zero)", "<=",
          lambda: max(np.max(np.abs(M.score_orthogonality(m, t))) for m, ts in every for t in ts))

    # --- prior --------------------------------------------------------------------------
    builtin_priors = [P.raised_cosine(), P.quartic_bump(), P.gaussian_prior(0.0, 2.0), bump2,
                      P.default_base_prior(2, 24)]

    def prior_psd():
        worst = 0.0
        for q in builtin_priors:
            r = psd_check(P.prior_information(q), 0.0)
            worst = min(worst, r.min_eigenvalue / max(1.0, abs(r.max_eigenvalue)))
        return -worst
    s.run("prior_psd", "prior information is positive semi-definite", "<=", prior_psd)
    s.run("prior_oracles", "closed-form prior information (raised cosine, quartic bump, Gaussian)", "<=",
          lambda: max(abs(P.prior_information(P.raised_cosine())[0, 0] - math.pi**2),
                      abs(P.prior_information(P.quartic_bump())[0, 0] - 10.0),
                      abs(P.prior_information(P.gaussian_prior(0.0, 2.0))[0, 0] - 0.25)))

    def scaling():
        base = P.prior_information(P.quartic_bump())[0, 0]
        return max(abs(P.prior_information(P.scaled_prior(P.quartic_bump(), 0.0, r))[0, 0] * r * r - base) / base
                   for r in (2.0, 1.0, 0.5, 0.1))
    s.run("prior_scaling", "information of theta0 + r H is I_H / r^2", "<=", scaling)
    s.run("prior_translation", "information of theta0 + r H does not depend on theta0", "<=",
          lambda: np.max(np.abs(P.prior_information(P.scaled_prior(bump2, [0.0, 0.0], 0.3))
                                - P.prior_information(P.scaled_prior(bump2, [2.0, -1.0], 0.3)))))

    def prior_pd():
        return min(eigendecompose_sym(P.prior_information(q))[0][-1] for q in builtin_priors if q.compact)
    s.run("prior_positive_definite", "a compactly supported prior cannot have zero information", ">",
          prior_pd)
    s.run("prior_normalization", "built-in priors are probability densities", "<=",
          lambda: max(abs(P.prior_mass(q) - 1.0) for q in builtin_priors))

    configured = build_prior(cfg.prior, cfg.base_dir) if cfg.prior is not None else bump

    def vanish():
        bc = P.boundary_vanish_check(configured, s.tol["boundary_vanish"])
        return 0.0 if bc.passed else max(v for *_, v in bc.failures) if bc.failures else 1.0
    s.run("boundary_vanish", f"prior density vanishes at finite boundary points ({configured.name})",
          "<=", vanish)

    # --- bounds -------------------------------------------------------------------------
    pm_g = P.posterior_mean(gauss, gprior)
    g1 = P.gaussian_prior(1.0, 1.0, nodes)
    bern_prior = P.quartic_bump(0.5, 0.3, nodes=nodes)
    configs = [(gauss, gprior, B.identity_target(1), pm_g),
               (gauss, g1, B.identity_target(1), M.constant_statistic(0.0)),
               (gauss, bump, psi_c, ind),
               (gauss, bump, B.identity_target(1), M.identity_statistic(1)),
               (bern, bern_prior, B.identity_target(1), M.Statistic(lambda x: x, bound=1.0))]
    reports = [B.van_trees_corollary(m, q, psi, st) for m, q, psi, st in configs]

    s.run("vt1_dominance", "Bayes risk is at least the van Trees bound", ">=",
          lambda: min(r.diagnostics["bayes_risk"] - r.int_psi_prime_dQ**2 / (r.I_Q + r.int_IP_dQ)
                      for r in reports), slack=True)
    s.run("corollary_dominance", "Bayes risk is at least squared bias plus the van Trees bound", ">=",
          lambda: min(r.diagnostics["bayes_risk"] - r.bound for r in reports), slack=True)
    s.run("corollary_above_vt1", "bias-corrected bound is never below the van Trees bound", ">=",
          lambda: min(r.bias_term**2 for r in reports))

    def conjugate():
        r = reports[0]
        return abs(r.diagnostics["bayes_risk"] - r.bound) / r.bound
    s.run("conjugate_equality", "posterior mean attains the van Trees bound in the Gaussian conjugate case",
          "<=", conjugate)

    vm = B.van_trees_matrix(g2, bump2, B.identity_target(2), M.identity_statistic(2))
    s.run("vtm_block_psd", "block matrix [[R, G^T], [G, I_Q + int I_P dQ]] is PSD", ">=",
          lambda: vm.block_psd.min_eigenvalue / max(1.0, vm.block_psd.max_eigenvalue), slack=True)
    s.run("vtm_gap_psd", "risk matrix minus Schur complement bound is PSD", ">=",
          lambda: vm.gap_psd.min_eigenvalue / max(1.0, vm.gap_psd.max_eigenvalue), slack=True)
    s.run("vtm_schur_value", "Schur bound for 2D Gaussian location with bump prior is Id / 11", "<=",
          lambda: np.max(np.abs(vm.schur_bound - np.eye(2) / 11.0)))

    def schur_1d():
        m, q, psi, st = configs[2]
        return abs(B.van_trees_matrix(m, q, psi, st).schur_bound[0, 0] - B.van_trees_1d(m, q, psi).bound)
    s.run("schur_1d_consistency", "1x1 Schur complement equals the one-dimensional bound", "<=", schur_1d)

    def equivariance():
        base = B.van_trees_1d(gauss, bump, psi_c).bound
        return abs(B.van_trees_1d(gauss, bump, psi_c.scaled(3.0)).bound / (9.0 * base) - 1.0)
    s.run("scale_equivariance", "bound for a psi is a^2 times the bound for psi", "<=", equivariance)
    s.run("key_equality", "2 int int Delta sqrt(q) xi (S - psi) = int psi' dQ", "<=",
          lambda: max(B.key_equality_residual(gauss, bump, psi_c, ind),
                      B.key_equality_residual(gauss, bump, psi_c, M.constant_statistic(0.0)),
                      B.key_equality_residual(g2, bump2, B.clamped_identity(2), quadrant)))
    s.run("delta_norm_identity", "4 int int Delta (x) Delta = I_Q + int I_P dQ", "<=",
          lambda: max(B.delta_norm_identity_residual(m, q).residual
                      for m, q in ((gauss, gprior), (gauss, bump), (bern, bern_prior), (g2, bump2))))
    s.run("delta_cross_term", "cross term int int grad q xi_dot xi vanishes", "<=",
          lambda: max(B.delta_norm_identity_residual(m, q).cross_term
                      for m, q in ((gauss, gprior), (gauss, bump), (bern, bern_prior))))

    def ibp():
        ax = Grid1D.gauss_legendre(-1.0, 1.0, 24)
        grid = GridP([ax, ax])
        g = B.prior_field(P.product_prior([P.quartic_bump()] * 2))
        fields = [B.target_field(B.clamped_identity(2), 0), B.target_field(B.clamped_identity(2), 1),
                  B.constant_field(1.0, 2)]
        return max(B.ibp_zero_residual(f, g, grid, i) for f in fields for i in range(2))
    s.run("ibp_zero", "int (d_i f g + f d_i g) = 0 for g vanishing on the boundary", "<=", ibp)

    def convergence():
        vals = []
        for k in (0, 1):
            m = F.gaussian_location(theta_range=(-2.0, 2.0), panel=2.0 / 2**k, order=3)
            q = P.raised_cosine(0.0, 1.0, nodes=4 * 2**k)
            vals.append((B.key_equality_residual(m, q, psi_c, ind), B.delta_norm_identity_residual(m, q).residual))
        ok = all(_converged(c, f) for c, f in zip(vals[0], vals[1]))
        return 0.0 if ok else 1.0
    s.run("residual_convergence", "identity residuals shrink when the grids are refined", "<=", convergence)

    # --- joint location model -----------------------------------------------------------
    jb = J.build_joint(gauss, bump, 1.0)
    s.run("joint_normalization", "every shifted joint measure M_alpha has mass one", "<=",
          lambda: max(abs(jb.mass(a) - 1.0) for a in (-0.9, -0.5, 0.0, 0.5, 0.9)))
    jcr = J.van_trees_as_cramer_rao(jb, ind, psi_c)
    s.run("joint_fisher_chain", "Fisher information of the location model is I_Q + int I_P dQ", "<=",
          lambda: max(abs(jcr.fisher_fd - jcr.fisher_delta), abs(jcr.fisher_delta - jcr.information)))
    s.run("joint_derivative_rate", "Delta is the L2 derivative of the joint root density", ">",
          lambda: J.verify_delta_is_joint_derivative(jb).slope)
    s.run("joint_gamma_derivative", "d gamma_J / d alpha at 0 equals int psi' dQ", "<=",
          lambda: abs(jcr.dgamma_fd - jcr.int_psi_prime_dQ))
    s.run("joint_cr_identification", "bias-corrected van Trees bound is the Cramer-Rao bound of M_alpha",
          "<=", lambda: jcr.gap)

    # --- LAM ----------------------------------------------------------------------------
    inst = L.LamInstance(gauss, 0.0, c_grid=(1.0, 2.0, 5.0, 10.0), n_grid=(10_000, 40_000))
    ih = float(inst.I_H[0, 0])
    s.run("lam_prior_scaling", "information of the shrunk prior is (n / c^2) I_H", "<=",
          lambda: max(abs(P.prior_information(inst.shrunk_prior(c, n))[0, 0] * c * c / n - ih) / ih
                      for c, n in inst.cells()))
    s.run("lam_gamma_exact", "Gamma(c, n) = (1 + I_H / c^2)^-1 for Gaussian location", "<=",
          lambda: max(abs(L.gamma_matrix(inst, c, n).Gamma[0, 0] - 1.0 / (1.0 + ih / c**2))
                      for c, n in inst.cells()))

    def monotone():
        gs = [L.gamma_matrix(inst, c, 10_000).Gamma for c in (1.0, 2.0, 5.0, 10.0)]
        return -min(psd_check(b - a).min_eigenvalue for a, b in zip(gs, gs[1:]))
    s.run("lam_monotone", "Gamma(c, n) increases with c in the PSD order", "<=", monotone)
    s.run("lam_limit", "limit bound grad psi^T I_P^-1 grad psi (Gaussian 1, Bernoulli 1/4, 2D trace 2)",
          "<=", lambda: max(abs(L.limit_bound(inst) - 1.0),
                            abs(L.limit_bound(L.LamInstance(bern, 0.5, radius=0.4, c_grid=(1.0,),
                                                            n_grid=(100,))) - 0.25),
                            abs(L.limit_bound(L.LamInstance(g2, [0.0, 0.0], c_grid=(1.0,), n_grid=(100,)))
                                - 2.0)))

    def gauss_integral():
        q = L.QuadraticForm([[2.0, 0.5], [0.5, 1.0]])
        gam = np.array([[1.0, 0.3], [0.3, 0.5]])
        mc, se = L.gaussian_quadratic_integral_mc(q, gam, seeds[2], 100_000)
        return abs(mc - L.gaussian_quadratic_integral(q, gam)) / se
    s.run("lam_gaussian_integral", "int l dN(0, Gamma) = trace(L Gamma), Monte Carlo in SE units", "<=",
          gauss_integral)

    inst_mc = L.LamInstance(gauss, 0.0, c_grid=(1.0,), n_grid=(200,))
    mm = L.local_minimax_risk(inst_mc, 1.0, 200, M.sample_mean(1), seeds[3], 4_000, G=2)
    s.run("lam_efficiency", "sample mean attains the LAM bound (|risk - 1| in SE units)", "<=",
          lambda: abs(mm.sup - 1.0) / mm.se if abs(L.limit_bound(inst_mc) - 1.0) <= 1e-8 else math.inf)
    s.run("lam_dominance", "finite LAM bound exceeds the local minimax risk by at most 3 SE", ">=",
          lambda: (mm.sup - L.lam_bound(inst_mc).rows[0]["bound_finite"]) / mm.se, slack=True)

    def probe():
        fc = F.first_coordinate_gaussian()
        pin = L.LamInstance(fc, [0.0, 0.0], c_grid=(5.0,), n_grid=(10_000,))
        tab = L.singular_probe(pin, [0.0, 1.0], c_values=(5.0, 10.0, 20.0))
        return float(np.max(np.abs(tab.ratios() / 4.0 - 1.0)))
    s.run("lam_singular_probe", "bound grows like c^2 along a kernel direction of I_P", "<=", probe)

    # --- cli ----------------------------------------------------------------------------
    def determinism():
        texts = []
        for _ in range(2):
            r = B.bayes_risk(gauss, gprior, B.identity_target(1), pm_g, "monte-carlo", seeds[4], 2_000)
            texts.append(report.csv_text(["value", "se"], [[r.value, r.se]]))
        return 0.0 if texts[0] == texts[1] else 1.0
    s.run("determinism", "identical seed and inputs give byte-identical CSV", "<=", determinism)
    s.run("anchors_present", "every check names the statement it exercises", "<=",
          lambda: float(sum(1 for r in s.rows if not r.anchor.strip())))
    return CheckSuiteReport(s.rows)

