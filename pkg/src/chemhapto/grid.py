"""Uniform cell-centered rectangular grids, scalar fields and quadrature.

Field values are stored as ``(ny, nx)`` arrays: row ``j`` holds the cells
with y-index ``j`` and the x-index ``i`` runs fastest, so ``values.ravel()``
is the row-major ordering used by the snapshot files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GridError(ValueError):
    """Invalid grid geometry or non-finite field data."""


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise GridError(f"cell counts must be integers, got {self.nx}x{self.ny}")
        if self.nx < 4 or self.ny < 4:
            raise GridError(f"need at least 4 cells per axis, got {self.nx}x{self.ny}")
        if not (np.isfinite(self.lx) and np.isfinite(self.ly)) or self.lx <= 0 or self.ly <= 0:
            raise GridError(f"side lengths must be positive, got {self.lx}x{self.ly}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Return the ``(X, Y)`` meshes of cell-center coordinates."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="xy")

    def transposed(self) -> GridSpec:
        return GridSpec(self.ny, self.nx, self.ly, self.lx)


@dataclass(frozen=True, eq=False)
class Field:
    """A finite scalar value per cell of ``grid``; read-only once built."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            if values.size != self.grid.nx * self.grid.ny:
                raise GridError(
                    f"expected {self.grid.nx * self.grid.ny} values, got {values.size}"
                )
            values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise GridError(f"non-finite value at cell (i={bad[1]}, j={bad[0]})")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> Field:
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> Field:
        X, Y = grid.centers()
        return cls(grid, np.broadcast_to(func(X, Y), grid.shape))

    def transposed(self) -> Field:
        return Field(self.grid.transposed(), self.values.T)

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    __hash__ = None


def _check_finite(f: Field) -> np.ndarray:
    a = f.values
    if not np.all(np.isfinite(a)):
        raise GridError("field contains non-finite values")
    return a


def integrate(f: Field) -> float:
    """Midpoint quadrature of ``f`` over the domain."""
    a = _check_finite(f)
    return float(a.sum() * f.grid.cell_area)


def sup_norm(f: Field) -> float:
    a = _check_finite(f)
    return float(np.abs(a).max())


def lp_integral(f: Field, p: float) -> float:
    """Return the integral of ``f**p``; ``f`` must be nonnegative unless ``p`` is an integer."""
    if p < 1:
        raise GridError(f"p must be >= 1, got {p}")
    a = _check_finite(f)
    if p == 1:
        return integrate(f)
    if float(p) != int(p) and a.min() < 0:
        raise GridError(f"negative entry with non-integer exponent p={p}")
    return float(np.power(a, p).sum() * f.grid.cell_area)


def write_snapshot(path, f: Field, t: float) -> None:
    """Write ``f`` as a header line ``nx ny lx ly t`` followed by ``ny`` rows of ``nx`` values."""
    g = f.grid
    lines = [f"{g.nx} {g.ny} {g.lx!r} {g.ly!r} {float(t)!r}"]
    for row in f.values:
        lines.append(" ".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> tuple[Field, float]:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise GridError(f"{path}: malformed header {header!r}")
        nx, ny = int(header[0]), int(header[1])
        lx, ly, t = float(header[2]), float(header[3]), float(header[4])
        rows = [line.split() for line in fh if line.strip()]
    if len(rows) != ny or any(len(r) != nx for r in rows):
        raise GridError(f"{path}: expected {ny} rows of {nx} values")
    values = np.array([[float(x) for x in r] for r in rows])
    return Field(GridSpec(nx, ny, lx, ly), values), t
