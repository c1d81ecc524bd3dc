"""Command-line front end: ``vantrees <task> --config <path> [--out DIR] [--seed U64] [--format F]``.

Exit status: 0 on success, 1 on a configuration error, 2 when a contract
check fails.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bounds as B, joint as J, lam as L, model as M, report
from .checks import check_all
from .config import FORMATS, TASKS, RunConfig, build_estimator, build_lam_instance, load_config, validate
from .errors import ConfigError, DimensionError, VanTreesError

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT = 0, 1, 2


class ContractFailure(Exception):
    """A task finished but one of its contract checks failed."""


def _emit(cfg: RunConfig, stem: str, payload, records: list[dict], fmt: str) -> list[Path]:
    out = []
    if fmt in ("json", "both"):
        out.append(report.write_text(cfg.out_dir / f"{stem}.json", report.dumps(payload)))
    if fmt in ("csv", "both"):
        out.append(report.write_text(cfg.out_dir / f"{stem}.csv", report.records_csv(records)))
    return out


def _thetas(cfg: RunConfig, p: int) -> np.ndarray:
    if "theta" not in cfg.numeric:
        raise ConfigError("numeric.theta (a list of parameter values) is required")
    t = np.asarray(cfg.numeric["theta"], dtype=float)
    return t.reshape(-1, p)


def task_fisher(cfg, fmt):
    model = cfg.build_model()
    rows = []
    for t in _thetas(cfg, model.p):
        fi = M.fisher_information(model, t)
        row = {f"theta_{i + 1}": float(v) for i, v in enumerate(t)}
        row.update({f"I_{i + 1}{j + 1}": float(fi[i, j]) for i in range(model.p) for j in range(model.p)})
        row["normalization_error"] = M.normalization_error(model, t)
        row["orthogonality"] = float(np.max(np.abs(M.score_orthogonality(model, t))))
        rows.append(row)
    _emit(cfg, "fisher", {"model": model.describe(), "rows": rows}, rows, fmt)


def task_dqm(cfg, fmt):
    model = cfg.build_model()
    rows = []
    for t in _thetas(cfg, model.p):
        for i in range(model.p):
            fit = M.dqm_certify(model, t, i)
            row = {f"theta_{k + 1}": float(v) for k, v in enumerate(t)}
            row.update({"direction": i + 1, "slope": fit.slope, "certified": fit.certified})
            rows.append(row)
    _emit(cfg, "dqm", {"model": model.describe(), "rows": rows}, rows, fmt)
    bad = [r for r in rows if not r["certified"]]
    if bad:
        raise ContractFailure(f"{len(bad)} DQM fit(s) below the certification threshold")


def _bound_task(cfg, fmt, kind):
    model = cfg.build_model()
    prior = cfg.build_prior()
    psi = cfg.build_target(model.p)
    stat = cfg.build_estimator(model, prior) if cfg.estimator is not None else None
    tol = float(cfg.numeric.get("dominance_tol", 1e-6))
    if kind == "vt1":
        rep = B.van_trees_1d(model, prior, psi, stat)
    elif kind == "corollary":
        if stat is None:
            raise ConfigError("the corollary task needs an estimator block")
        rep = B.van_trees_corollary(model, prior, psi, stat)
    else:
        if stat is None:
            raise ConfigError("the vtm task needs an estimator block")
        psd_tol = float(cfg.numeric.get("psd_tol", 1e-7))
        vm = B.van_trees_matrix(model, prior, psi, stat, psd_tol)
        rep = vm.report
        payload = {**rep.as_dict(), "block": vm.block, "block_psd": vm.block_psd, "gap_psd": vm.gap_psd,
                   "ridge_bound": vm.ridge_bound}
        _emit(cfg, kind, payload, [rep.to_csv_row()], fmt)
        if not (vm.block_psd and vm.gap_psd):
            raise ContractFailure("block matrix or risk minus Schur bound fails the PSD check")
        return
    _emit(cfg, kind, rep.as_dict(), [rep.to_csv_row()], fmt)
    risk = rep.diagnostics.get("bayes_risk")
    if risk is not None and risk < rep.bound - tol:
        raise ContractFailure(f"Bayes risk {risk:.10g} is below the bound {rep.bound:.10g}")


def task_joint(cfg, fmt):
    model = cfg.build_model()
    prior = cfg.build_prior()
    psi = cfg.build_target(model.p)
    stat = cfg.build_estimator(model, prior)
    jm = J.build_joint(model, prior, cfg.numeric.get("delta"))
    rec = J.van_trees_as_cramer_rao(jm, stat, psi)
    fit = J.verify_delta_is_joint_derivative(jm)
    payload = {"delta": jm.delta, "record": rec, "derivative_rate": {"slope": fit.slope,
                                                                    "certified": fit.certified}}
    row = {"delta": jm.delta, **report.flatten(rec), "gap": rec.gap, "rate_slope": fit.slope}
    _emit(cfg, "joint", payload, [row], fmt)
    if rec.gap > 1e-5 or not fit.certified:
        raise ContractFailure("joint location model does not reproduce the bias-corrected bound")


def task_lam(cfg, fmt):
    model = cfg.build_model()
    psi = cfg.build_target(model.p)
    inst = build_lam_instance(cfg, model, psi)
    spec = cfg.numeric.get("lam", {})
    est = spec.get("estimator", {"kind": "sample_mean", "params": {"d": model.grid.dim}})
    stat = build_estimator(est, model, None)
    rows = L.lam_experiment(inst, stat, cfg.seed, int(spec.get("n_draws", 20_000)),
                            int(spec.get("G", L.DEFAULT_G)))
    _emit(cfg, "lam", {"theta0": inst.theta0, "loss": inst.loss.name, "rows": rows}, rows, fmt)
    bad = [r for r in rows if r["bound_finite"] > r["risk"] + 3 * r["se"]]
    if bad:
        raise ContractFailure(f"{len(bad)} cell(s) where the finite LAM bound exceeds risk + 3 SE")


def task_check_all(cfg, fmt):
    rep = check_all(cfg)
    if fmt in ("json", "both"):
        report.write_text(cfg.out_dir / "check_all.json", report.dumps(rep.as_dict()))
    if fmt in ("csv", "both"):
        report.write_text(cfg.out_dir / "check_all.csv", rep.to_csv())
    for r in rep.rows:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.check}  {report.fmt(r.value)}")
    if not rep.passed:
        raise ContractFailure(f"{len(rep.failures())} check(s) failed: "
                              + ", ".join(r.check for r in rep.failures()))


DISPATCH = {
    "fisher": task_fisher,
    "dqm": task_dqm,
    "vt1": lambda c, f: _bound_task(c, f, "vt1"),
    "corollary": lambda c, f: _bound_task(c, f, "corollary"),
    "vtm": lambda c, f: _bound_task(c, f, "vtm"),
    "joint": task_joint,
    "lam": task_lam,
    "check-all": task_check_all,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vantrees", description="Information lower bounds for estimation.")
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides output.directory)")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides numeric.seed)")
    ap.add_argument("--format", choices=FORMATS, help="output format (overrides output.formats)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.task is not None and cfg.task != args.task:
            raise ConfigError(f"config is for task {cfg.task!r}, not {args.task!r}")
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.numeric["seed"] = args.seed
        if args.out is not None:
            cfg.output["directory"] = str(Path(args.out).resolve())
        validate(cfg, args.task)
    except (ConfigError, DimensionError) as exc:
        print(f"vantrees: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fmt = args.format or cfg.formats
    try:
        DISPATCH[args.task](cfg, fmt)
    except ConfigError as exc:
        print(f"vantrees: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractFailure, VanTreesError) as exc:
        print(f"vantrees: contract failure: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
