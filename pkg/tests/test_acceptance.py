"""Acceptance criteria 1-11, each at its stated tolerance.

Every criterion prints one ``PASS``/``FAIL`` line; the lines are also
repeated in the pytest terminal summary.  Run standalone with
``python3 tests/test_acceptance.py``.
"""

import itertools
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from vantrees import bounds as B, families as F, joint as J, lam as L, model as M, prior as P
from vantrees.numerics import Grid1D, GridP

ROOT = Path(__file__).resolve().parents[1]
NOISE_FLOOR = 1e-13
LINES: list[str] = []


def report(number: int, title: str, checks: dict[str, bool], detail: str = ""):
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title}"
    if detail:
        line += f" ({detail})"
    if failed:
        line += " failed: " + ", ".join(failed)
    LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_fisher_oracles():
    vals = {
        "gaussian": M.fisher_information(F.gaussian_location(), 0.0)[0, 0],
        "bernoulli": M.fisher_information(F.bernoulli(), 0.5)[0, 0],
        "exponential": M.fisher_information(F.exponential_rate(), 2.0)[0, 0],
    }
    fi2 = M.fisher_information(F.gaussian_location_nd(2), [0.3, -0.2])
    report(1, "Fisher information oracles", {
        "gaussian=1": abs(vals["gaussian"] - 1.0) <= 1e-8,
        "bernoulli=4": abs(vals["bernoulli"] - 4.0) <= 1e-8,
        "exponential=0.25": abs(vals["exponential"] - 0.25) <= 1e-6,
        "2d=identity": bool(np.max(np.abs(fi2 - np.eye(2))) <= 1e-8),
    }, ", ".join(f"{k}={v:.12g}" for k, v in vals.items()))


def test_criterion_02_prior_information_oracles():
    rc = P.prior_information(P.raised_cosine())[0, 0]
    qb = P.prior_information(P.quartic_bump())[0, 0]
    checks = {"raised_cosine=pi^2": abs(rc - math.pi**2) <= 1e-8, "bump=10": abs(qb - 10.0) <= 1e-8}
    for tau in (0.5, 1.0, 2.0):
        checks[f"gaussian tau={tau}"] = abs(P.prior_information(P.gaussian_prior(0.0, tau))[0, 0]
                                            - 1 / tau**2) <= 1e-8
    for r in (2.0, 1.0, 0.5, 0.1):
        got = P.prior_information(P.scaled_prior(P.raised_cosine(), [0.0], r))[0, 0]
        checks[f"scaling r={r}"] = abs(got * r * r / rc - 1.0) <= 1e-6
    report(2, "prior information oracles and I/r^2 scaling", checks, f"raised_cosine={rc:.12g}, bump={qb:.12g}")


def test_criterion_03_conjugate_equality():
    m, q = F.gaussian_location(), P.gaussian_prior(0.0, 1.0)
    post = P.posterior_mean(m, q)
    bound = B.van_trees_1d(m, q, B.identity_target(), post).bound
    risk = B.bayes_risk(m, q, B.identity_target(), post).value
    gap = abs(risk - bound) / bound
    report(3, "conjugate Gaussian: Bayes risk equals the one-dimensional bound",
           {"bound=0.5": abs(bound - 0.5) <= 1e-8, "relative gap<=1e-6": gap <= 1e-6},
           f"bound={bound:.12g}, risk={risk:.12g}, gap={gap:.2e}")


def _residuals(level: int) -> dict[str, float]:
    """Identity residuals on a deliberately coarse grid pair refined ``level`` times."""
    m = F.gaussian_location(theta_range=(-2.0, 2.0), panel=2.0 / 2**level, order=3)
    q = P.raised_cosine(0.0, 1.0, nodes=4 * 2**level)
    ind = M.indicator_statistic(0.2)
    grid = Grid1D.gauss_legendre(-1.0, 1.0, 4 * 2**level)
    return {
        "orthogonality": float(np.max(np.abs(M.score_orthogonality(m, 0.3)))),
        "key_equality": B.key_equality_residual(m, q, B.square_target(), ind),
        "delta_norm": B.delta_norm_identity_residual(m, q).residual,
        "ibp": B.ibp_zero_residual(B.expectation_field(m, ind), B.prior_field(q), grid, 0),
    }


def test_criterion_04_identity_residuals():
    checks = {}
    worst = {"orthogonality": 0.0, "key_equality": 0.0, "delta_norm": 0.0, "ibp": 0.0}
    for name in ("gaussian_location", "bernoulli", "exponential_rate", "triangular_location",
                 "gaussian_location_nd", "gaussian_mean_logvar"):
        m = F.FAMILIES[name]()
        theta = {"bernoulli": 0.3, "exponential_rate": 1.5}.get(name, np.zeros(m.p))
        worst["orthogonality"] = max(worst["orthogonality"], float(np.max(np.abs(M.score_orthogonality(m, theta)))))
    g, bump, gp = F.gaussian_location(), P.quartic_bump(), P.gaussian_prior()
    bern, bq = F.bernoulli(), P.quartic_bump(0.5, 0.3)
    g2 = F.gaussian_location_nd(2)
    bump2 = P.product_prior([P.quartic_bump(nodes=24)] * 2)
    quad = M.Statistic(lambda x: (x[:, :2] > 0).astype(float), bound=1.0, dim=2, name="quadrant")
    worst["key_equality"] = max(
        B.key_equality_residual(g, bump, B.square_target(), M.indicator_statistic(0.2)),
        B.key_equality_residual(g, bump, B.identity_target(), M.constant_statistic(0.5)),
        B.key_equality_residual(bern, bq, B.identity_target(), M.identity_statistic().clamped(1.0)),
        B.key_equality_residual(g2, bump2, B.clamped_identity(2), quad))
    worst["delta_norm"] = max(B.delta_norm_identity_residual(m, q).residual
                              for m, q in ((g, gp), (g, bump), (bern, bq), (g2, bump2)))
    ax = Grid1D.gauss_legendre(-1.0, 1.0, 24)
    g_field = B.prior_field(P.product_prior([P.quartic_bump()] * 2))
    fields = [B.target_field(B.clamped_identity(2), 0), B.constant_field(1.0, 2),
              B.expectation_field(g2, quad, 1)]
    worst["ibp"] = max(B.ibp_zero_residual(f, g_field, GridP([ax, ax]), i) for f in fields for i in range(2))
    tol = {"orthogonality": 1e-9, "key_equality": 1e-5, "delta_norm": 1e-5, "ibp": 1e-6}
    for k, v in worst.items():
        checks[f"{k}<={tol[k]:g}"] = v <= tol[k]
    levels = [_residuals(k) for k in range(3)]
    for k in tol:
        for a, b in zip(levels, levels[1:]):
            if not (b[k] < a[k] or b[k] <= NOISE_FLOOR):
                checks[f"{k} shrinks"] = False
        checks.setdefault(f"{k} shrinks", True)
    detail = ", ".join(f"{k}={v:.2e}" for k, v in worst.items())
    detail += "; coarse->fine " + ", ".join(f"{k}: " + " > ".join(f"{lv[k]:.1e}" for lv in levels) for k in tol)
    report(4, "identity residuals on built-ins and their shrinkage under refinement", checks, detail)


def test_criterion_05_dqm_certification():
    cases = [("gaussian_location", 0.4, 1.9), ("bernoulli", 0.3, 1.9), ("bernoulli", 0.6, 1.9),
             ("exponential_rate", 2.0, 1.9), ("triangular_location", 0.0, 1.3),
             ("triangular_location", 0.25, 1.3)]
    checks, slopes = {}, []
    for name, theta, thr in cases:
        slope = M.dqm_certify(F.FAMILIES[name](), theta, 0).slope
        # triangular threshold is strict, the smooth ones inclusive
        checks[f"{name}@{theta}"] = slope > thr if thr == 1.3 else slope >= thr
        slopes.append(f"{name}@{theta}={slope:.3f}")
    report(5, "quadratic-mean differentiability remainder slopes", checks, ", ".join(slopes))


def test_criterion_06_matrix_bound():
    m = F.gaussian_location_nd(2)
    q = P.product_prior([P.quartic_bump(nodes=24)] * 2)
    vm = B.van_trees_matrix(m, q, B.identity_target(2), M.identity_statistic(2), psd_tol=1e-7)
    g, bump = F.gaussian_location(), P.quartic_bump()
    st = M.identity_statistic().clamped(10.0)
    one = B.van_trees_matrix(g, bump, B.identity_target(), st).schur_bound[0, 0]
    vt1 = B.van_trees_1d(g, bump, B.identity_target(), st).bound
    report(6, "block matrix bound for 2D Gaussian with product bump prior", {
        "block min eig>=-1e-7": vm.block_psd.min_eigenvalue >= -1e-7,
        "risk-schur PSD": vm.gap_psd.passed,
        "1x1 matches scalar": abs(one - vt1) <= 1e-12,
    }, f"block min eig={vm.block_psd.min_eigenvalue:.3e}, gap min eig={vm.gap_psd.min_eigenvalue:.3e}, "
       f"|1x1 - scalar|={abs(one - vt1):.1e}")


def test_criterion_07_joint_location_model():
    jm = J.build_joint(F.gaussian_location(), P.quartic_bump(), 1.0)
    rec = J.van_trees_as_cramer_rao(jm, M.indicator_statistic(0.1), B.identity_target())
    report(7, "joint location model reproduces the bias-corrected bound", {
        "fisher": abs(rec.fisher_fd - rec.information) <= 1e-5,
        "dgamma": abs(rec.dgamma_fd - rec.int_psi_prime_dQ) <= 1e-5,
        "corollary=CR": rec.gap <= 1e-5,
    }, f"fisher={rec.fisher_fd:.10g} vs {rec.information:.10g}, dgamma={rec.dgamma_fd:.10g} vs "
       f"{rec.int_psi_prime_dQ:.10g}, gap={rec.gap:.1e}")


def test_criterion_08_product_fisher():
    base = F.bernoulli()
    checks, parts = {}, []
    for theta in (0.3, 0.5):
        ip = M.fisher_information(base, theta)[0, 0]
        for n in (2, 3):
            brute = 0.0
            for xs in itertools.product((0.0, 1.0), repeat=n):
                x = np.array([xs])
                t = np.array([[theta]])
                f = M.product_model(base, n).f(t, x)[0, 0]
                score = sum((xk - theta) / (theta * (1 - theta)) for xk in xs)
                brute += f * score * score
            quad = M.fisher_information(M.product_model(base, n), theta)[0, 0]
            checks[f"n={n},theta={theta}"] = (abs(brute / (n * ip) - 1) <= 1e-8
                                              and abs(quad / (n * ip) - 1) <= 1e-8)
            parts.append(f"n={n},theta={theta}: {quad:.12g}")
    report(8, "product-model Fisher over all Bernoulli outcomes is n I_P", checks, "; ".join(parts))


def test_criterion_09_lam_gaussian():
    g = F.gaussian_location()
    inst = L.LamInstance(g, 0.0, c_grid=(1.0, 2.0, 5.0), n_grid=(2_500, 10_000))
    ih = inst.I_H[0, 0]
    gam_err = max(abs(L.gamma_matrix(inst, c, n).Gamma[0, 0] - 1 / (1 + ih / c**2)) for c, n in inst.cells())
    limit = L.limit_bound(inst)
    seed = 20240611
    small = L.LamInstance(g, 0.0, c_grid=(1.0,), n_grid=(200,))
    mm = L.local_minimax_risk(small, 1.0, 200, M.sample_mean(1), seed, 20_000)
    grid = L.LamInstance(g, 0.0, c_grid=(1.0, 2.0), n_grid=(200, 400, 800))
    rows = L.lam_experiment(grid, M.sample_mean(1), seed, 20_000)
    dominated = all(r["bound_finite"] <= r["risk"] + 3 * r["se"] for r in rows)
    report(9, "LAM for Gaussian location, psi = id, l = v^2", {
        "Gamma exact": gam_err <= 1e-8,
        "limit=1": abs(limit - 1.0) <= 1e-8,
        "risk=1 within 3 SE": abs(mm.sup - 1.0) <= 3 * mm.se,
        "finite bound <= risk + 3 SE on grid": dominated,
    }, f"max Gamma error={gam_err:.1e}, limit={limit:.12g}, risk(n=200)={mm.sup:.4f}+-{mm.se:.4f}, "
       f"{len(rows)} grid cells")


def test_criterion_10_singular_probe():
    inst = L.LamInstance(F.first_coordinate_gaussian(), [0.0, 0.0], c_grid=(5.0,), n_grid=(10_000,))
    ip = M.fisher_information(inst.model, [0.0, 0.0])
    tab = L.singular_probe(inst, [0.0, 1.0], c_values=(5.0, 10.0))
    ratio = float(tab.ratios()[0])
    report(10, "LAM bound grows like c^2 along a kernel direction of I_P", {
        "I_P = diag(1, 0)": bool(np.allclose(ip, np.diag([1.0, 0.0]), atol=1e-8)),
        "ratio in [3.6, 4.4]": 3.6 <= ratio <= 4.4,
    }, f"bound(5)={tab.bounds[0]:.6g}, bound(10)={tab.bounds[1]:.6g}, ratio={ratio:.6g}")


def test_criterion_11_determinism(tmp_path):
    outputs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        proc = subprocess.run([sys.executable, "-m", "vantrees.cli", "check-all", "--config",
                               str(ROOT / "configs" / "check_all.json"), "--out", str(out), "--format", "csv"],
                              capture_output=True, text=True)
        outputs.append((proc.returncode, (out / "check_all.csv").read_bytes()))
    seed = json.loads((ROOT / "configs" / "check_all.json").read_text())["numeric"]["seed"]
    report(11, "two check-all runs with the same seed give byte-identical CSV", {
        "exit 0": outputs[0][0] == 0 and outputs[1][0] == 0,
        "identical bytes": outputs[0][1] == outputs[1][1],
    }, f"seed={seed}, {len(outputs[0][1])} bytes")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
