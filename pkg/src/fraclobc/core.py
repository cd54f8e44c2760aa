"""Domains, uniform grids, distance functions and grid-function arithmetic.

Conventions used everywhere downstream:

* a grid stores only the n interior nodes of its open interval; the two
  endpoint values are identically zero,
* every grid function is extended by zero outside the open interval
  (the nonlocal operator sees that tail exactly),
* all types are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadResolution, EtaTooLarge, GridMismatch


@dataclass(frozen=True)
class Domain:
    """Open interval (a, b)."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a < self.b):
            raise ValueError(f"need a < b, got ({self.a}, {self.b})")

    @property
    def width(self) -> float:
        return self.b - self.a


def dist(domain: Domain, x) -> np.ndarray | float:
    """Distance to the boundary of ``domain``, extended by zero outside.

    Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    d = np.minimum(x - domain.a, domain.b - x)
    d = np.maximum(d, 0.0)
    return float(d) if d.ndim == 0 else d


def shrink(domain: Domain, eta: float) -> Domain:
    """Inner domain at distance > eta from the boundary."""
    if eta < 0 or eta >= domain.width / 2:
        raise EtaTooLarge(
            f"eta={eta} outside [0, {domain.width / 2}) for {domain}"
        )
    return Domain(domain.a + eta, domain.b - eta)


@dataclass(frozen=True)
class Grid:
    """Uniform interior grid: node_i = a + i*h, i = 1..n, h = (b-a)/(n+1)."""

    domain: Domain
    n: int
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 3:
            raise BadResolution(f"need n >= 3 interior nodes, got {self.n}")
        h = self.domain.width / (self.n + 1)
        nodes = self.domain.a + h * np.arange(1, self.n + 1)
        nodes.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "nodes", nodes)

    def boundary_distance(self) -> np.ndarray:
        """d(x_i) for all nodes (vectorized convenience)."""
        return dist(self.domain, self.nodes)


def make_grid(domain: Domain, n: int) -> Grid:
    return Grid(domain, n)


@dataclass(frozen=True)
class GridFunction:
    """Nodal values on a grid, zero outside the open domain."""

    grid: Grid
    values: np.ndarray

    EXTERIOR = "zero"  # the one supported extension convention

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"values shape {values.shape} != ({self.grid.n},)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: Grid, f) -> "GridFunction":
        return cls(grid, np.asarray(f(grid.nodes), dtype=float))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n))


def require_same_grid(f: GridFunction, g_or_grid) -> None:
    grid = g_or_grid.grid if isinstance(g_or_grid, GridFunction) else g_or_grid
    if f.grid is grid:
        return
    same = (
        f.grid.n == grid.n
        and f.grid.domain == grid.domain
    )
    if not same:
        raise GridMismatch(f"{f.grid} vs {grid}")


def sup_norm(f: GridFunction) -> float:
    return float(np.max(np.abs(f.values))) if f.grid.n else 0.0


def linf_seminorm_holder(f: GridFunction, beta: float) -> float:
    """Discrete Hoelder seminorm  max_{i != j} |f_i - f_j| / |x_i - x_j|^beta.

    The boundary points carry the value 0 and participate as virtual nodes,
    so boundary growth like d(x)^s is seen by the seminorm.
    """
    if not (0 < beta <= 1):
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    x = np.concatenate(([f.grid.domain.a], f.grid.nodes, [f.grid.domain.b]))
    v = np.concatenate(([0.0], f.values, [0.0]))
    dx = np.abs(x[:, None] - x[None, :])
    dv = np.abs(v[:, None] - v[None, :])
    mask = dx > 0
    return float(np.max(dv[mask] / dx[mask] ** beta))


def extend_to_grid(f: GridFunction, parent: Grid) -> GridFunction:
    """Zero-extend a sub-grid function onto a parent grid.

    Requires nested node sets (same spacing, sub-domain offset an integer
    multiple of h), which is how eta-families are built.
    """
    h = parent.h
    if abs(f.grid.h - h) > 1e-12 * h:
        raise GridMismatch(
            f"spacings differ: {f.grid.h} vs {h}; node sets do not nest"
        )
    off = (f.grid.domain.a - parent.domain.a) / h
    k = int(round(off))
    if abs(off - k) > 1e-9 or k < 0 or k + f.grid.n > parent.n:
        raise GridMismatch("sub-grid nodes are not a subset of parent nodes")
    out = np.zeros(parent.n)
    out[k : k + f.grid.n] = f.values
    return GridFunction(parent, out)
