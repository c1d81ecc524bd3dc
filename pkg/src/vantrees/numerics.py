"""Quadrature grids, small symmetric-matrix tools, rate fits and the RNG contract.

All grids expose the same two attributes used everywhere else in the package:

``points``
    array of shape ``(N, d)`` with the integration nodes (C-order for tensor grids);
``weights``
    array of shape ``(N,)`` with strictly positive quadrature weights.

Integration against a grid is then ``values @ weights``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InsufficientDataError, NumericError

#: relative level below which an integrand is treated as negligible when truncating
TAIL_LEVEL = 1e-14
#: ``sqrt(2 log(1/TAIL_LEVEL))``: Gaussian half-width (in standard deviations) of the truncation
GAUSS_TAIL = math.sqrt(2.0 * math.log(1.0 / TAIL_LEVEL))
#: cutoff of the pseudo-inverse relative to the largest eigenvalue
PINV_CUTOFF = 1e-12
MAX_DENSE_DIM = 16

KINDS = ("uniform-trapezoid", "gauss-legendre", "discrete-atoms")


@dataclass(frozen=True, eq=False)
class Grid1D:
    """One-dimensional quadrature rule.

    Use the constructors :meth:`trapezoid`, :meth:`gauss_legendre`,
    :meth:`composite_gauss_legendre` and :meth:`atoms` rather than the raw
    initializer.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        weights = np.ascontiguousarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise DimensionError("nodes and weights must be 1-D arrays of equal length")
        if self.kind not in KINDS:
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
            raise NumericError("grid nodes and weights must be finite")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("grid weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def trapezoid(cls, a: float, b: float, n: int) -> "Grid1D":
        if n < 2 or not b > a:
            raise ValueError("trapezoid grid needs n >= 2 and b > a")
        nodes = np.linspace(a, b, n)
        h = (b - a) / (n - 1)
        weights = np.full(n, h)
        weights[[0, -1]] = h / 2
        return cls(nodes, weights, "uniform-trapezoid", {"interval": (float(a), float(b)), "n": n})

    @classmethod
    def gauss_legendre(cls, a: float, b: float, n: int) -> "Grid1D":
        if n < 1 or not b > a:
            raise ValueError("gauss-legendre grid needs n >= 1 and b > a")
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (b - a)
        return cls(0.5 * (a + b) + half * x, half * w, "gauss-legendre",
                   {"interval": (float(a), float(b)), "n": n})

    @classmethod
    def composite_gauss_legendre(cls, breaks: Iterable[float], order: int) -> "Grid1D":
        """Gauss-Legendre rule of the given order on every panel between sorted breakpoints.

        Integrands that are smooth on each panel (indicators or kinks located
        at breakpoints) are integrated to near machine precision.
        """
        breaks = np.unique(np.asarray(list(breaks), dtype=float))
        if breaks.size < 2:
            raise ValueError("need at least two breakpoints")
        x, w = np.polynomial.legendre.leggauss(order)
        a, b = breaks[:-1, None], breaks[1:, None]
        nodes = (0.5 * (a + b) + 0.5 * (b - a) * x).ravel()
        weights = (0.5 * (b - a) * w).ravel()
        return cls(nodes, weights, "gauss-legendre",
                   {"interval": (float(breaks[0]), float(breaks[-1])),
                    "panels": int(breaks.size - 1), "order": order})

    @classmethod
    def panels(cls, a: float, b: float, width: float, order: int,
               extra_breaks: Iterable[float] = ()) -> "Grid1D":
        """Composite Gauss-Legendre on ``[a, b]`` with panel edges on the lattice ``width * Z``."""
        lattice = width * np.arange(math.floor(a / width), math.ceil(b / width) + 1)
        inner = [t for t in list(lattice) + list(extra_breaks) if a < t < b]
        return cls.composite_gauss_legendre([a, b, *inner], order)

    @classmethod
    def atoms(cls, values: Sequence[float]) -> "Grid1D":
        values = np.asarray(values, dtype=float)
        return cls(values, np.ones_like(values), "discrete-atoms", {"atoms": values.size})

    @property
    def points(self) -> np.ndarray:
        return self.nodes[:, None]

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.size,)

    @property
    def dim(self) -> int:
        return 1

    @property
    def axes(self) -> tuple["Grid1D", ...]:
        return (self,)

    def describe(self) -> dict:
        return {"kind": self.kind, "nodes": self.size, **self.meta}


class GridP:
    """Tensor product of :class:`Grid1D` axes."""

    def __init__(self, axes: Sequence[Grid1D]):
        if len(axes) == 0:
            raise DimensionError("a tensor grid needs at least one axis")
        self.axes = tuple(axes)
        self.shape = tuple(ax.size for ax in self.axes)
        self.size = int(np.prod(self.shape))
        self.dim = len(self.axes)
        mesh = np.meshgrid(*(ax.nodes for ax in self.axes), indexing="ij")
        self.points = np.stack([m.ravel() for m in mesh], axis=1)
        w = self.axes[0].weights
        for ax in self.axes[1:]:
            w = np.multiply.outer(w, ax.weights)
        self.weights = np.ascontiguousarray(w).ravel()

    @classmethod
    def of(cls, grid: "Grid1D | GridP") -> "GridP":
        return grid if isinstance(grid, GridP) else cls([grid])

    def describe(self) -> dict:
        return {"kind": "tensor", "nodes": self.size, "axes": [ax.describe() for ax in self.axes]}


def integrate(values, grid: Grid1D | GridP) -> np.ndarray | float:
    """Quadrature sum ``sum_i values_i * weights_i``.

    ``values`` may carry leading batch dimensions; its trailing dimension(s)
    must match the grid (either flattened ``N`` or the tensor ``shape``).
    """
    values = np.asarray(values, dtype=float)
    n = grid.size
    if values.shape[-1:] == (n,):
        flat = values
    elif values.ndim >= len(grid.shape) and values.shape[values.ndim - len(grid.shape):] == tuple(grid.shape):
        flat = values.reshape(values.shape[: values.ndim - len(grid.shape)] + (n,))
    else:
        raise DimensionError(f"values of shape {values.shape} do not match grid with {n} nodes")
    out = flat @ grid.weights
    return float(out) if np.ndim(out) == 0 else out


# --- symmetric matrices -------------------------------------------------------


def symmetrize(m) -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


def eigendecompose_sym(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (columns)."""
    m = symmetrize(m)
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix has non-finite entries")
    if m.shape[0] > MAX_DENSE_DIM:
        raise DimensionError(f"dense eigendecomposition limited to dim <= {MAX_DENSE_DIM}")
    lam, u = np.linalg.eigh(m)
    order = np.argsort(lam)[::-1]
    return lam[order], u[:, order]


@dataclass(frozen=True)
class PSDResult:
    passed: bool
    min_eigenvalue: float
    max_eigenvalue: float
    tol: float

    def __bool__(self) -> bool:
        return self.passed


def psd_check(m, tol: float = 0.0) -> PSDResult:
    """Pass iff the smallest eigenvalue is ``>= -tol * max(1, |largest eigenvalue|)``."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    lam, _ = eigendecompose_sym(m)
    lo, hi = float(lam[-1]), float(lam[0])
    return PSDResult(lo >= -tol * max(1.0, abs(hi)), lo, hi, tol)


def pinv_sym(m, cutoff: float = PINV_CUTOFF) -> tuple[np.ndarray, bool]:
    """Pseudo-inverse through the eigendecomposition.

    Returns the inverse and a flag telling whether any eigenvalue was cut
    (``|lambda| <= cutoff * lambda_max``).
    """
    lam, u = eigendecompose_sym(m)
    scale = max(abs(lam[0]), abs(lam[-1]))
    keep = np.abs(lam) > cutoff * scale if scale > 0 else np.zeros_like(lam, dtype=bool)
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    return (u * inv) @ u.T, bool(not np.all(keep))


# --- rate fits ----------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of ``log residual`` against ``log h``.

    ``slope`` is ``+inf`` when every residual vanished (exact at grid resolution).
    """

    steps: np.ndarray
    residuals: np.ndarray
    slope: float
    threshold: float | None = None

    @property
    def certified(self) -> bool:
        if self.threshold is None:
            raise ValueError("no certification threshold attached to this fit")
        return self.slope > self.threshold


def fit_rate(pairs: Iterable[tuple[float, float]], noise_floor: float = 0.0,
             threshold: float | None = None) -> RateFit:
    pairs = [(float(h), float(r)) for h, r in pairs]
    if len(pairs) < 3:
        raise InsufficientDataError("a rate fit needs at least 3 (h, residual) pairs")
    h = np.array([p[0] for p in pairs])
    r = np.array([p[1] for p in pairs])
    if np.any(h <= 0) or np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("steps must be positive and residuals non-negative and finite")
    order = np.argsort(h)[::-1]
    h, r = h[order], r[order]
    usable = r > noise_floor
    if not np.any(usable):
        return RateFit(h, r, math.inf, threshold)
    if usable.sum() < 3:
        raise InsufficientDataError(
            f"only {int(usable.sum())} residual(s) above the noise floor {noise_floor:g}")
    slope = np.polyfit(np.log(h[usable]), np.log(r[usable]), 1)[0]
    return RateFit(h, r, float(slope), threshold)


# --- RNG contract ---------------------------------------------------------------


def make_rng(seed: int) -> np.random.Generator:
    """Generator for an explicit unsigned 64-bit seed (PCG64)."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError("seed must be an integer")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(seed))


def split_seeds(seed: int, k: int) -> list[int]:
    """Deterministic child seeds for splitting one Monte Carlo job into ``k`` pieces."""
    children = np.random.SeedSequence(int(seed)).spawn(k)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def pooled_mean(means: Sequence[float], ses: Sequence[float], counts: Sequence[int]) -> tuple[float, float]:
    """Combine independent Monte Carlo pieces: count-weighted mean and pooled standard error."""
    counts = np.asarray(counts, dtype=float)
    w = counts / counts.sum()
    mean = float(np.dot(w, means))
    se = float(math.sqrt(np.sum((w * np.asarray(ses)) ** 2)))
    return mean, se


def gaussian_halfwidth(scale: float) -> float:
    """Truncation half-width for a Gaussian factor of standard deviation ``scale``."""
    return GAUSS_TAIL * scale
