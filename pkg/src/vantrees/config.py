"""Run configuration: strict JSON parsing and assembly of models, priors, targets and estimators.

Every block is a JSON object; unknown keys are rejected so that a typo can
never silently fall back to a default.  Relative file paths are resolved
against the directory of the config file.
"""

from __future__ import annotations

import inspect
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import bounds, families, lam, model as mdl, prior as pri, tabular
from .errors import ConfigError, DimensionError, VanTreesError

SCHEMA_VERSION = 1
TASKS = ("fisher", "dqm", "vt1", "corollary", "vtm", "joint", "lam", "check-all")
STOCHASTIC = ("lam", "check-all")
FORMATS = ("csv", "json", "both")

TOP_KEYS = {"schema_version", "task", "model", "prior", "target", "estimator", "numeric", "output", "checks"}
NUMERIC_KEYS = {"seed", "theta", "mc_draws", "delta", "lam", "psd_tol", "dominance_tol"}
LAM_KEYS = {"theta0", "c_grid", "n_grid", "radius", "G", "n_draws", "loss", "estimator"}
OUTPUT_KEYS = {"directory", "formats"}
CHECK_KEYS = {"resolution", "tolerances"}

PRIOR_FAMILIES = {
    "raised_cosine": pri.raised_cosine,
    "quartic_bump": pri.quartic_bump,
    "gaussian": pri.gaussian_prior,
    "uniform": pri.uniform_prior,
    "default_base": pri.default_base_prior,
}
TARGETS = {
    "identity": lambda p, **kw: bounds.identity_target(p),
    "clamped_identity": lambda p, level=10.0: bounds.clamped_identity(p, level),
    "constant": lambda p, value=0.0: bounds.constant_target(value, p),
    "square": lambda p: bounds.square_target(),
}


@dataclass
class RunConfig:
    task: str | None
    model: dict | None
    prior: dict | None
    target: dict
    estimator: dict | None
    numeric: dict
    output: dict
    checks: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def seed(self) -> int | None:
        return self.numeric.get("seed")

    @property
    def out_dir(self) -> Path:
        return self._path(self.output.get("directory", "out"))

    @property
    def formats(self) -> str:
        return self.output.get("formats", "both")

    def _path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    # --- assembly ------------------------------------------------------------------------

    def build_model(self) -> mdl.Model:
        if self.model is None:
            raise ConfigError("config has no model block")
        return build_model(self.model, self.base_dir)

    def build_prior(self, p: int | None = None) -> pri.Prior:
        if self.prior is None:
            raise ConfigError("config has no prior block")
        return build_prior(self.prior, self.base_dir)

    def build_target(self, p: int) -> bounds.Target:
        return build_target(self.target, p)

    def build_estimator(self, model: mdl.Model, prior: pri.Prior | None, spec: dict | None = None) -> mdl.Statistic:
        spec = self.estimator if spec is None else spec
        if spec is None:
            raise ConfigError("config has no estimator block")
        return build_estimator(spec, model, prior)


def _check_keys(block: Any, allowed: set, where: str) -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    return block


def _call(fn, params: dict, where: str):
    params = _check_keys(params, set(inspect.signature(fn).parameters), f"{where}.params")
    try:
        return fn(**params)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _domain(spec):
    if spec is None:
        return None
    lo, hi = spec
    return mdl.ParamDomain.box(lo, hi)


def build_model(spec: dict, base_dir: Path) -> mdl.Model:
    _check_keys(spec, {"family", "params", "file", "product_n"}, "model")
    if ("family" in spec) == ("file" in spec):
        raise ConfigError("model block needs exactly one of 'family' or 'file'")
    if "file" in spec:
        path = Path(spec["file"])
        path = path if path.is_absolute() else base_dir / path
        if not path.exists():
            raise ConfigError(f"model file {path} does not exist")
        m = tabular.load_tabulated_model(path)
    else:
        fam = families.FAMILIES.get(spec["family"])
        if fam is None:
            raise ConfigError(f"unknown model family {spec['family']!r}; known: {', '.join(families.FAMILIES)}")
        m = _call(fam, spec.get("params", {}), "model")
    if "product_n" in spec:
        m = mdl.product_model(m, int(spec["product_n"]))
    return m


def build_prior(spec: dict, base_dir: Path) -> pri.Prior:
    _check_keys(spec, {"family", "params", "file", "factors", "domain"}, "prior")
    domain = _domain(spec.get("domain"))
    if "file" in spec:
        path = Path(spec["file"])
        path = path if path.is_absolute() else base_dir / path
        if not path.exists():
            raise ConfigError(f"prior file {path} does not exist")
        return tabular.load_tabulated_prior(path, domain)
    if "factors" in spec:
        return pri.product_prior([build_prior(f, base_dir) for f in spec["factors"]], domain)
    fam = PRIOR_FAMILIES.get(spec.get("family"))
    if fam is None:
        raise ConfigError(f"unknown prior family {spec.get('family')!r}; known: {', '.join(PRIOR_FAMILIES)}")
    params = dict(spec.get("params", {}))
    if domain is not None:
        if "domain" not in inspect.signature(fam).parameters:
            raise ConfigError(f"prior family {spec['family']!r} does not take a domain")
        params["domain"] = domain
    return _call(fam, params, "prior")


def build_target(spec: dict, p: int) -> bounds.Target:
    _check_keys(spec, {"kind", "params", "scale"}, "target")
    fn = TARGETS.get(spec.get("kind", "identity"))
    if fn is None:
        raise ConfigError(f"unknown target {spec.get('kind')!r}; known: {', '.join(TARGETS)}")
    t = fn(p, **_check_keys(spec.get("params", {}), set(inspect.signature(fn).parameters) - {"p"},
                            "target.params"))
    return t.scaled(float(spec["scale"])) if "scale" in spec else t


def build_estimator(spec: dict, model: mdl.Model, prior: pri.Prior | None) -> mdl.Statistic:
    _check_keys(spec, {"kind", "params", "clamp"}, "estimator")
    kind = spec.get("kind")
    params = spec.get("params", {})
    if kind == "posterior_mean":
        if prior is None:
            raise ConfigError("posterior_mean estimator needs a prior")
        s = pri.posterior_mean(model, prior)
    elif kind == "identity":
        s = _call(mdl.identity_statistic, params, "estimator")
    elif kind == "constant":
        s = _call(mdl.constant_statistic, params, "estimator")
    elif kind == "indicator":
        s = _call(mdl.indicator_statistic, params, "estimator")
    elif kind == "sample_mean":
        s = _call(mdl.sample_mean, params, "estimator")
    else:
        raise ConfigError(f"unknown estimator {kind!r}")
    return s.clamped(float(spec["clamp"])) if "clamp" in spec else s


def build_lam_instance(cfg: RunConfig, model: mdl.Model, psi: bounds.Target) -> lam.LamInstance:
    spec = _check_keys(cfg.numeric.get("lam", {}), LAM_KEYS, "numeric.lam")
    loss = None
    if "loss" in spec:
        L = spec["loss"]
        loss = lam.QuadraticForm(np.eye(psi.s) if L == "squared_norm" else L)
    kw = {k: spec[k] for k in ("c_grid", "n_grid", "radius") if k in spec}
    if "theta0" not in spec:
        raise ConfigError("numeric.lam.theta0 is required for the lam task")
    return lam.LamInstance(model, spec["theta0"], psi, loss=loss, **kw)


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    _check_keys(raw, TOP_KEYS, "config")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    task = raw.get("task")
    if task is not None and task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    numeric = _check_keys(raw.get("numeric", {}), NUMERIC_KEYS, "numeric")
    seed = numeric.get("seed")
    if seed is not None and not (isinstance(seed, int) and 0 <= seed < 2**64):
        raise ConfigError("numeric.seed must be an unsigned 64-bit integer")
    output = _check_keys(raw.get("output", {}), OUTPUT_KEYS, "output")
    if output.get("formats", "both") not in FORMATS:
        raise ConfigError(f"output.formats must be one of {FORMATS}")
    checks = _check_keys(raw.get("checks", {}), CHECK_KEYS, "checks")
    return RunConfig(task, raw.get("model"), raw.get("prior"), raw.get("target", {"kind": "identity"}),
                     raw.get("estimator"), numeric, output, checks,
                     base_dir if base_dir is not None else Path.cwd())


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path), path.parent)


def validate(cfg: RunConfig, task: str) -> None:
    """Cross-block consistency: dimensions agree and stochastic tasks carry a seed."""
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    if task in STOCHASTIC and cfg.seed is None:
        raise ConfigError(f"task {task} needs numeric.seed (or --seed)")
    if task == "check-all":
        return
    try:
        model = cfg.build_model()
        p = model.p
        if cfg.prior is not None and task not in ("fisher", "dqm", "lam"):
            prior = cfg.build_prior()
            if prior.p != p:
                raise ConfigError(f"dimension mismatch: model p={p} but prior p={prior.p}")
        psi = cfg.build_target(p)
        if cfg.estimator is not None and task in ("vt1", "corollary", "vtm", "joint"):
            stat = cfg.build_estimator(model, cfg.build_prior() if cfg.prior else None)
            if stat.dim != psi.s:
                raise ConfigError(f"dimension mismatch: estimator has {stat.dim} components, target {psi.s}")
    except DimensionError as exc:
        raise ConfigError(f"dimension mismatch: {exc}") from None
    except VanTreesError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
