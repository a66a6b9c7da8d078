"""Tonelli-Cesari variation and BV norm for piecewise-constant grid functions.

The directional variation along axis i of a step function on a tensor grid is
the sum, over lines parallel to axis i, of the absolute jumps across interior
grid planes, each weighted by the (n-1)-volume of the line's projected cell.
Jumps at the cube boundary do not count.  The total variation is the maximum
over axes, and the BV norm adds the L1 norm.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple

import numpy as np

from .errors import AxisOutOfRange
from .geometry import RectPartition, overlap_matrix


@dataclass(frozen=True)
class GridFunction:
    """Piecewise-constant function on a tensor grid: one density value per cell."""

    grid: RectPartition
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.cells_per_axis:
            values = values.reshape(self.grid.cells_per_axis)
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    # -- constructors ----------------------------------------------------------

    @classmethod
    def uniform(cls, grid: RectPartition) -> "GridFunction":
        return cls(grid, np.ones(grid.cells_per_axis))

    @classmethod
    def from_flat(cls, grid: RectPartition, flat: np.ndarray) -> "GridFunction":
        return cls(grid, np.asarray(flat, dtype=float).reshape(grid.cells_per_axis))

    @classmethod
    def indicator(cls, grid: RectPartition, lo, hi, normalize: bool = True) -> "GridFunction":
        """Density proportional to the overlap fraction of each cell with the box [lo, hi]."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        frac = None
        for i, b in enumerate(grid.breaks):
            seg = np.maximum(
                np.minimum(b[1:], hi[i]) - np.maximum(b[:-1], lo[i]), 0.0
            ) / np.diff(b)
            frac = seg if frac is None else np.multiply.outer(frac, seg)
        gf = cls(grid, frac.reshape(grid.cells_per_axis))
        return gf.normalized() if normalize else gf

    @classmethod
    def random_density(cls, grid: RectPartition, rng: np.random.Generator) -> "GridFunction":
        vals = rng.random(grid.cells_per_axis) + 0.05
        return cls(grid, vals).normalized()

    # -- basic functionals -----------------------------------------------------

    def cell_volumes(self) -> np.ndarray:
        return self.grid.cell_volumes()

    def mass(self) -> float:
        return float(np.sum(self.values * self.cell_volumes()))

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values) * self.cell_volumes()))

    def l1_distance(self, other: "GridFunction") -> float:
        return float(np.sum(np.abs(self.values - other.values) * self.cell_volumes()))

    def normalized(self) -> "GridFunction":
        m = self.mass()
        if m <= 0:
            raise ValueError("cannot normalize a function with nonpositive mass")
        return GridFunction(self.grid, self.values / m)

    def value_at(self, x) -> float:
        return float(self.values[self.grid.locate(x)])

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values)

    def scale(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    # -- grid changes ------------------------------------------------------------

    def resample(self, finer: RectPartition) -> "GridFunction":
        """Copy density values onto a refining grid (exact; preserves L1 and V)."""
        if not finer.is_refinement_of(self.grid):
            raise ValueError("target grid does not refine the source grid")
        index_maps = []
        for fine_b, coarse_b in zip(finer.breaks, self.grid.breaks):
            mids = 0.5 * (fine_b[:-1] + fine_b[1:])
            index_maps.append(np.searchsorted(coarse_b, mids, side="right") - 1)
        return GridFunction(finer, self.values[np.ix_(*index_maps)])

    def project(self, coarse: RectPartition) -> "GridFunction":
        """Mass-exact projection onto any tensor grid (alignment not required)."""
        masses = self.values * self.cell_volumes()
        for axis in range(self.grid.n):
            ov = overlap_matrix(coarse.breaks[axis], self.grid.breaks[axis])
            frac = ov / np.diff(self.grid.breaks[axis])[None, :]
            masses = np.moveaxis(np.tensordot(frac, masses, axes=(1, axis)), 0, axis)
        return GridFunction(coarse, masses / coarse.cell_volumes())

    # -- serialization -------------------------------------------------------------

    def write_csv(self, path) -> None:
        n = self.grid.n
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"i{i + 1}" for i in range(n)] + ["value"])
            for idx in np.ndindex(*self.grid.cells_per_axis):
                writer.writerow([*(i + 1 for i in idx), f"{self.values[idx]:.17g}"])


class BVNorm(NamedTuple):
    l1: float
    variation: float
    norm: float


def directional_variation(f: GridFunction, axis: int) -> float:
    """Line-wise variation along `axis`, integrated over the projection."""
    if not 0 <= axis < f.grid.n:
        raise AxisOutOfRange(f"axis {axis} for a {f.grid.n}-dimensional grid")
    jumps = np.abs(np.diff(f.values, axis=axis))
    if jumps.size == 0:
        return 0.0
    other_widths = [w for i, w in enumerate(f.grid.widths) if i != axis]
    if other_widths:
        proj = reduce(np.multiply.outer, other_widths)
        jumps = jumps * np.expand_dims(proj, axis=axis)
    return float(np.sum(jumps))


def total_variation(f: GridFunction) -> float:
    """Maximum of the directional variations over all axes."""
    return max(directional_variation(f, i) for i in range(f.grid.n))


def bv_norm(f: GridFunction) -> BVNorm:
    """(L1 norm, total variation, BV norm = L1 + V)."""
    l1 = f.l1_norm()
    var = total_variation(f)
    return BVNorm(l1=l1, variation=var, norm=l1 + var)
