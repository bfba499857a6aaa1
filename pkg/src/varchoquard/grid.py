"""Uniform 1-D grids on an interval, nodal grid functions and trapezoid quadrature.

Double integrals skip the diagonal pairs ``i == j`` when asked to; with the
grid spacing playing the role of the excluded ball radius, this is the
discrete principal value used throughout the package.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonFiniteKernelError

__all__ = [
    "Grid1D",
    "GradedGrid",
    "GridFunction",
    "integrate",
    "double_integrate",
    "set_threads",
    "get_threads",
    "map_rows",
    "write_csv",
    "read_csv",
]

_threads = 1


def set_threads(n):
    """Select serial (``n == 1``) or row-partitioned threaded pair sums."""
    global _threads
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = n


def get_threads():
    return _threads


def map_rows(fn, nrows, block=64):
    """Evaluate ``fn(slice)`` over contiguous row blocks and concatenate.

    ``fn`` must return a 1-D array with one entry per row of its slice. The
    blocks are fixed by ``nrows`` and ``block`` alone, so the concatenated
    result is identical in serial and threaded mode.
    """
    slices = [slice(i, min(i + block, nrows)) for i in range(0, nrows, block)]
    if _threads == 1 or len(slices) == 1:
        parts = [fn(sl) for sl in slices]
    else:
        with ThreadPoolExecutor(max_workers=_threads) as pool:
            parts = list(pool.map(fn, slices))
    return np.concatenate(parts) if parts else np.zeros(0)


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with ``M`` nodes on the closed interval ``[a, b]``."""

    a: float
    b: float
    M: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.M) != self.M or self.M < 3:
            raise ValueError(f"need an integer node count M >= 3, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @cached_property
    def h(self):
        return (self.b - self.a) / (self.M - 1)

    @cached_property
    def nodes(self):
        x = self.a + self.h * np.arange(self.M)
        x[-1] = self.b
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self):
        w = np.full(self.M, self.h)
        w[0] = w[-1] = self.h / 2
        w.flags.writeable = False
        return w

    @property
    def length(self):
        return self.b - self.a

    def refine(self, factor=2):
        """Grid with ``factor`` times as many intervals."""
        return Grid1D(self.a, self.b, (self.M - 1) * factor + 1)


class GradedGrid:
    """Strictly increasing, non-uniform node set with trapezoid weights.

    Used for locally refined evaluation of concentrated profiles; it offers
    the same ``a, b, M, nodes, weights`` surface as :class:`Grid1D`.
    """

    def __init__(self, nodes):
        x = np.array(nodes, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise ValueError("need at least 3 nodes")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        x.flags.writeable = False
        self.nodes = x
        self.a = float(x[0])
        self.b = float(x[-1])
        self.M = x.size
        d = np.diff(x)
        w = np.zeros_like(x)
        w[:-1] += d / 2
        w[1:] += d / 2
        w.flags.writeable = False
        self.weights = w
        self.h = float(d.min())

    @property
    def length(self):
        return self.b - self.a

    def __repr__(self):
        return f"GradedGrid(a={self.a}, b={self.b}, M={self.M}, hmin={self.h:.3g})"


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values at the nodes of a grid.

    With ``zero_boundary`` set the two end values are exactly zero; this is
    the discrete stand-in for membership in the zero-trace space.
    """

    grid: Grid1D
    values: np.ndarray
    zero_boundary: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} values, got shape {v.shape}")
        if self.zero_boundary and (v[0] != 0.0 or v[-1] != 0.0):
            raise ValueError("zero_boundary function must vanish at both end nodes")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid, f, zero_boundary=False):
        """Sample ``f`` at the nodes; with ``zero_boundary`` the ends are set to 0."""
        v = np.array(f(np.asarray(grid.nodes)), dtype=float) * np.ones(grid.M)
        if zero_boundary:
            v[0] = v[-1] = 0.0
        return cls(grid, v, zero_boundary)

    @classmethod
    def zeros(cls, grid, zero_boundary=True):
        return cls(grid, np.zeros(grid.M), zero_boundary)

    @property
    def x(self):
        return self.grid.nodes

    def with_values(self, values):
        return GridFunction(self.grid, values, self.zero_boundary)

    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            if other.grid is not self.grid and other.grid != self.grid:
                raise ValueError("grid functions live on different grids")
            return GridFunction(
                self.grid,
                op(self.values, other.values),
                self.zero_boundary and other.zero_boundary,
            )
        return GridFunction(self.grid, op(self.values, float(other)), False)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            return self._combine(c, np.multiply)
        return GridFunction(self.grid, self.values * float(c), self.zero_boundary)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridFunction(self.grid, self.values / float(c), self.zero_boundary)

    def __neg__(self):
        return GridFunction(self.grid, -self.values, self.zero_boundary)

    def __abs__(self):
        return GridFunction(self.grid, np.abs(self.values), self.zero_boundary)

    def is_zero(self):
        return not np.any(self.values)


def _nodal(f, grid):
    if isinstance(f, GridFunction):
        return f.grid, f.values
    if grid is None:
        raise ValueError("a grid is required unless f is a GridFunction")
    if callable(f):
        return grid, np.asarray(f(grid.nodes), dtype=float) * np.ones(grid.M)
    v = np.asarray(f, dtype=float)
    if v.shape != (grid.M,):
        raise ValueError(f"expected {grid.M} nodal values, got shape {v.shape}")
    return grid, v


def integrate(f, grid=None):
    """Composite trapezoid value of ``f`` (GridFunction, nodal array or callable)."""
    grid, v = _nodal(f, grid)
    return float(np.dot(grid.weights, v))


def double_integrate(F, grid, exclude_diagonal=True):
    """Trapezoid tensor sum ``sum_ij w_i w_j F(x_i, x_j)``.

    ``F`` is either a callable taking broadcast node arrays ``(X, Y)`` or an
    ``M x M`` array of pair values. With ``exclude_diagonal`` the ``i == j``
    terms are skipped and never evaluated for finiteness.
    """
    x = np.asarray(grid.nodes)
    w = np.asarray(grid.weights)
    M = x.size
    if callable(F):
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.asarray(F(x[:, None], x[None, :]), dtype=float)
        vals = np.broadcast_to(vals, (M, M))
    else:
        vals = np.asarray(F, dtype=float)
        if vals.shape != (M, M):
            raise ValueError(f"pair array must be {M}x{M}, got {vals.shape}")
    if exclude_diagonal:
        vals = vals.copy()
        np.fill_diagonal(vals, 0.0)
    bad = ~np.isfinite(vals)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise NonFiniteKernelError(
            f"non-finite integrand at pair ({i}, {j}): x={x[i]!r}, y={x[j]!r}",
            index=(int(i), int(j)),
        )

    def rows(sl):
        return vals[sl] @ w

    return float(np.dot(w, map_rows(rows, M)))


def write_csv(u, path):
    """Write ``x,value`` rows in node order with 17 significant digits."""
    data = np.column_stack([u.grid.nodes, u.values])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header="x,value", comments="")


def read_csv(path, grid, zero_boundary=None):
    """Read an ``x,value`` file and check its nodes against ``grid``."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().replace(" ", "")
        if header != "x,value":
            raise ValueError(f"{os.fspath(path)}: expected header 'x,value', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (grid.M, 2):
        raise ValueError(
            f"{os.fspath(path)}: expected {grid.M} rows of 2 columns, got {data.shape}"
        )
    tol = 1e-9 * max(1.0, abs(grid.a), abs(grid.b))
    mismatch = np.abs(data[:, 0] - grid.nodes) > tol
    if mismatch.any():
        i = int(np.argmax(mismatch))
        raise ValueError(
            f"{os.fspath(path)}: node {i} is x={data[i, 0]!r}, grid has {grid.nodes[i]!r}"
        )
    v = data[:, 1].copy()
    if zero_boundary is None:
        zero_boundary = v[0] == 0.0 and v[-1] == 0.0
    return GridFunction(grid, v, bool(zero_boundary))
