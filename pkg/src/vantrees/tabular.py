"""Tabulated models and priors read from CSV files.

Model file: the header is ``theta\\x,x_1,...,x_N`` and each following row is
``theta_k,f_{theta_k}(x_1),...,f_{theta_k}(x_N)``.  An optional first line
``# measure: atoms`` declares counting measure on the ``x`` values; the default
is the trapezoid rule on a uniformly spaced ``x`` grid.

Prior file: header ``theta,q`` followed by one row per node.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DimensionError, ModelDefinitionError
from .model import Model, ParamDomain
from .numerics import Grid1D
from .prior import Prior, tabulated_prior
from . import report

MODEL_HEADER = "theta\\x"


def _read_rows(path: Path) -> tuple[dict, list[list[str]]]:
    opts = {}
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if row[0].lstrip().startswith("#"):
                key, _, val = ",".join(row).lstrip("# ").partition(":")
                opts[key.strip()] = val.strip()
                continue
            rows.append([lineno, *row])
    return opts, rows


def _floats(row, path):
    lineno, *cells = row
    try:
        return [float(c) for c in cells]
    except ValueError:
        raise ConfigError(f"{path}:{lineno}: non-numeric entry") from None


def load_tabulated_model(path, normalization_tol: float = 1e-6) -> Model:
    """One-parameter model from a density table; ``xi`` is a cubic spline in ``theta`` per ``x`` node."""
    path = Path(path)
    opts, rows = _read_rows(path)
    if len(rows) < 5:
        raise ConfigError(f"{path}: need a header and at least 4 theta rows")
    head = rows[0]
    if head[1].strip() != MODEL_HEADER:
        raise ConfigError(f"{path}:{head[0]}: first header cell must be {MODEL_HEADER!r}")
    xs = np.array(_floats([head[0], *head[2:]], path))
    table = np.array([_floats(r, path) for r in rows[1:]])
    if table.shape[1] != xs.size + 1:
        raise DimensionError(f"{path}: rows have {table.shape[1] - 1} densities for {xs.size} x values")
    thetas, dens = table[:, 0], table[:, 1:]
    if np.any(np.diff(thetas) <= 0) or np.any(np.diff(xs) <= 0):
        raise ConfigError(f"{path}: theta and x values must be strictly increasing")
    if np.any(dens < 0):
        raise ModelDefinitionError(f"{path}: negative density values")
    measure = opts.get("measure", "trapezoid")
    if measure == "atoms":
        grid = Grid1D.atoms(xs)
    elif measure == "trapezoid":
        spacing = np.diff(xs)
        if np.max(np.abs(spacing - spacing.mean())) > 1e-9 * max(1.0, abs(spacing.mean())):
            raise ConfigError(f"{path}: trapezoid measure needs uniformly spaced x values")
        grid = Grid1D.trapezoid(xs[0], xs[-1], xs.size)
    else:
        raise ConfigError(f"{path}: unknown measure {measure!r}")
    mass = dens @ grid.weights
    worst = int(np.argmax(np.abs(mass - 1.0)))
    if abs(mass[worst] - 1.0) > normalization_tol:
        raise ModelDefinitionError(f"{path}: row theta={thetas[worst]:g} integrates to {mass[worst]:.10g}")

    spline = CubicSpline(thetas, np.sqrt(dens), axis=0)
    dspline = spline.derivative()

    def density(t, x):
        idx = _x_index(xs, x)
        return np.clip(spline(t[:, 0])[:, idx], 0.0, None) ** 2

    def root_derivative(t, x):
        idx = _x_index(xs, x)
        root = spline(t[:, 0])[:, idx]
        # xi_dot is zero where the interpolated root density is clipped to 0
        return (dspline(t[:, 0])[:, idx] * (root > 0))[..., None]

    lo, hi = float(thetas[0]), float(thetas[-1])
    return Model(density, grid, ParamDomain.box([lo], [hi]), root_derivative=root_derivative,
                 name=f"tabulated:{path.name}", params={"rows": int(thetas.size), "measure": measure})


def _x_index(xs: np.ndarray, x: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(xs, x[:, 0])
    idx = np.clip(idx, 0, xs.size - 1)
    if not np.allclose(xs[idx], x[:, 0], rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(xs))))):
        raise ValueError("tabulated models are only defined on their x nodes")
    return idx


def write_tabulated_model(path, model: Model, thetas) -> Path:
    thetas = np.asarray(thetas, dtype=float).ravel()
    xs = model.grid.points[:, 0]
    dens = model.f(thetas[:, None])
    lines = []
    if model.grid.kind == "discrete-atoms":
        lines.append("# measure: atoms\n")
    body = report.csv_text([MODEL_HEADER, *map(report.fmt, xs)],
                           ([t, *row] for t, row in zip(thetas.tolist(), dens.tolist())))
    return report.write_text(path, "".join(lines) + body)


def load_tabulated_prior(path, domain: ParamDomain | None = None, **kwargs) -> Prior:
    path = Path(path)
    _, rows = _read_rows(path)
    if not rows or [c.strip() for c in rows[0][1:]] != ["theta", "q"]:
        raise ConfigError(f"{path}: header must be 'theta,q'")
    table = np.array([_floats(r, path) for r in rows[1:]])
    if table.ndim != 2 or table.shape[1] != 2:
        raise DimensionError(f"{path}: expected two columns")
    return tabulated_prior(table[:, 0], table[:, 1], domain, **kwargs)


def write_tabulated_prior(path, prior: Prior, thetas) -> Path:
    thetas = np.asarray(thetas, dtype=float).ravel()
    q = prior.q(thetas[:, None])
    return report.write_text(path, report.csv_text(["theta", "q"], zip(thetas.tolist(), q.tolist())))
