"""Rectangular partitions of the unit cube and piecewise-affine coordinate maps.

A tensor-grid partition splits [0,1]^n into axis-aligned boxes, half-open on
the right except for the last cell per axis (closed), so every point of the
cube lies in exactly one cell.  Maps are given coordinate-wise: on each cell
the i-th output depends only on x_i through a strictly monotone affine branch.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyAxis,
    EndpointNotZeroOne,
    NotStrictlyIncreasing,
    PointOutsideCube,
)

# Slack for branch images that leave [0,1] by floating-point roundoff only.
IMAGE_ATOL = 1e-9
# Breakpoints closer than this are treated as coincident when composing branches.
MERGE_TOL = 1e-12


def _check_axis_breaks(breaks: np.ndarray, axis: int) -> None:
    if breaks.ndim != 1 or breaks.size < 2:
        raise EmptyAxis(f"axis {axis}: need at least 2 breakpoints")
    if np.any(np.diff(breaks) <= 0):
        raise NotStrictlyIncreasing(f"axis {axis}: breakpoints must strictly increase")
    if breaks[0] != 0.0 or breaks[-1] != 1.0:
        raise EndpointNotZeroOne(f"axis {axis}: breakpoints must run from 0 to 1")


def _locate(breaks: np.ndarray, t):
    """Cell index of t under the half-open convention (last cell closed)."""
    idx = np.searchsorted(breaks, t, side="right") - 1
    return np.clip(idx, 0, breaks.size - 2)


@dataclass(frozen=True)
class RectPartition:
    """Tensor-grid partition of [0,1]^n given by per-axis breakpoint arrays."""

    breaks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.breaks) == 0:
            raise EmptyAxis("partition needs at least one axis")
        canon = tuple(np.asarray(b, dtype=float) for b in self.breaks)
        for i, b in enumerate(canon):
            _check_axis_breaks(b, i)
            b.setflags(write=False)
        object.__setattr__(self, "breaks", canon)

    @classmethod
    def uniform(cls, n: int, cells) -> "RectPartition":
        """Uniform grid with `cells` cells per axis (int or per-axis sequence)."""
        counts = [cells] * n if np.isscalar(cells) else list(cells)
        return cls(tuple(np.linspace(0.0, 1.0, c + 1) for c in counts))

    @property
    def n(self) -> int:
        return len(self.breaks)

    @property
    def cells_per_axis(self) -> tuple[int, ...]:
        return tuple(b.size - 1 for b in self.breaks)

    @property
    def q(self) -> int:
        return int(np.prod(self.cells_per_axis))

    @property
    def widths(self) -> tuple[np.ndarray, ...]:
        return tuple(np.diff(b) for b in self.breaks)

    def cell_volumes(self) -> np.ndarray:
        """Array of cell volumes, shape = cells_per_axis."""
        vols = reduce(np.multiply.outer, self.widths)
        return vols.reshape(self.cells_per_axis)

    def midpoints(self, axis: int) -> np.ndarray:
        b = self.breaks[axis]
        return 0.5 * (b[:-1] + b[1:])

    def locate(self, x) -> tuple[int, ...]:
        """Multi-index of the cell containing x; raises outside the cube."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise PointOutsideCube(f"expected a point in {self.n} dimensions")
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise PointOutsideCube(f"point {x} outside the unit cube")
        return tuple(int(_locate(self.breaks[i], x[i])) for i in range(self.n))

    def cell_box(self, idx: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.breaks[i][idx[i]] for i in range(self.n)])
        hi = np.array([self.breaks[i][idx[i] + 1] for i in range(self.n)])
        return lo, hi

    def flat_index(self, idx: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(idx), self.cells_per_axis))

    def is_refinement_of(self, other: "RectPartition", tol: float = 1e-12) -> bool:
        """True if every breakpoint of `other` is (within tol) a line of self."""
        if self.n != other.n:
            return False
        for mine, theirs in zip(self.breaks, other.breaks):
            pos = np.searchsorted(mine, theirs)
            pos = np.clip(pos, 0, mine.size - 1)
            near = np.minimum(
                np.abs(mine[pos] - theirs),
                np.abs(mine[np.maximum(pos - 1, 0)] - theirs),
            )
            if np.any(near > tol):
                return False
        return True


@dataclass(frozen=True)
class PartitionSummary:
    """Derived statistics of a tensor partition.

    q  -- number of cells
    c_t -- number of cell vertices strictly interior to the cube
    M  -- largest number of cells whose interior meets a single axis-aligned
          hyperplane x_d = z
    """

    q: int
    c_t: int
    M: int
    cells_per_axis: tuple[int, ...]


def partition_stats(partition: RectPartition) -> PartitionSummary:
    """Cell count, interior crossing-point count and hyperplane complexity.

    The hyperplane sweep probes one position per cell midline per axis, which
    attains the maximum on tensor grids (the count is piecewise constant in z
    with plateaus between breakpoints).
    """
    r = partition.cells_per_axis
    q = partition.q
    c_t = int(np.prod([ri - 1 for ri in r]))
    M = 0
    for d in range(partition.n):
        others = q // r[d]
        breaks = partition.breaks[d]
        for z in partition.midpoints(d):
            inside = int(np.sum((breaks[:-1] < z) & (z < breaks[1:])))
            M = max(M, inside * others)
    return PartitionSummary(q=q, c_t=c_t, M=M, cells_per_axis=r)


def validate_partition(breaks_per_axis: Iterable) -> PartitionSummary:
    """Validate raw per-axis breakpoints and return partition statistics."""
    partition = RectPartition(tuple(np.asarray(b, dtype=float) for b in breaks_per_axis))
    return partition_stats(partition)


def refining_grid(partition: RectPartition, target_cells_per_axis) -> RectPartition:
    """Uniform-in-cell refinement of `partition` with >= target cells per axis.

    Every partition cell on axis i is split into ceil(target/r_i) equal pieces,
    so the result refines the partition exactly (shared joints are copied, not
    recomputed).
    """
    targets = (
        [target_cells_per_axis] * partition.n
        if np.isscalar(target_cells_per_axis)
        else list(target_cells_per_axis)
    )
    axes = []
    for b, target in zip(partition.breaks, targets):
        pieces = max(1, math.ceil(target / (b.size - 1)))
        pts = [
            np.linspace(b[k], b[k + 1], pieces + 1)[:-1] for k in range(b.size - 1)
        ]
        axes.append(np.concatenate(pts + [np.array([1.0])]))
    return RectPartition(tuple(axes))


def overlap_matrix(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Lengths of pairwise intersections of two interval families.

    rows, cols are breakpoint arrays; entry [a, b] is the length of
    [rows[a], rows[a+1]] ∩ [cols[b], cols[b+1]].
    """
    lo = np.maximum(rows[:-1, None], cols[None, :-1])
    hi = np.minimum(rows[1:, None], cols[None, 1:])
    return np.maximum(hi - lo, 0.0)


# -- coordinate maps ----------------------------------------------------------


@dataclass(frozen=True)
class AxisBranches:
    """One coordinate of a map: affine, strictly monotone branches over an axis.

    Branch s maps [breaks[s], breaks[s+1]] into [0,1] as
    t -> slopes[s] * t + intercepts[s].
    """

    breaks: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float)
        slopes = np.asarray(self.slopes, dtype=float)
        intercepts = np.asarray(self.intercepts, dtype=float)
        _check_axis_breaks(breaks, 0)
        if slopes.shape != (breaks.size - 1,) or intercepts.shape != slopes.shape:
            raise ValueError("need one (slope, intercept) pair per cell")
        if np.any(slopes == 0.0):
            raise ValueError("branch slopes must be nonzero")
        ys = np.stack([slopes * breaks[:-1] + intercepts, slopes * breaks[1:] + intercepts])
        if ys.min() < -IMAGE_ATOL or ys.max() > 1.0 + IMAGE_ATOL:
            raise ValueError("branch image leaves [0,1]")
        for arr in (breaks, slopes, intercepts):
            arr.setflags(write=False)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "intercepts", intercepts)

    @property
    def n_branches(self) -> int:
        return self.slopes.size

    def branch_index(self, t):
        return _locate(self.breaks, t)

    def __call__(self, t):
        s = self.branch_index(t)
        return np.clip(self.slopes[s] * t + self.intercepts[s], 0.0, 1.0)

    def image(self, s: int) -> tuple[float, float]:
        """Closed image interval of branch s (endpoints sorted)."""
        a = self.slopes[s] * self.breaks[s] + self.intercepts[s]
        b = self.slopes[s] * self.breaks[s + 1] + self.intercepts[s]
        lo, hi = (a, b) if a <= b else (b, a)
        return max(lo, 0.0), min(hi, 1.0)

    def min_abs_slope(self) -> float:
        return float(np.min(np.abs(self.slopes)))


def compose_axis(first: AxisBranches, then: AxisBranches) -> AxisBranches:
    """Branches of `then` ∘ `first` (apply `first`, feed the result to `then`)."""
    breaks = [0.0]
    slopes: list[float] = []
    intercepts: list[float] = []
    for s in range(first.n_branches):
        u, v = first.breaks[s], first.breaks[s + 1]
        a, b = first.slopes[s], first.intercepts[s]
        lo, hi = sorted((a * u + b, a * v + b))
        interior = then.breaks[(then.breaks > lo + MERGE_TOL) & (then.breaks < hi - MERGE_TOL)]
        cuts = np.sort((interior - b) / a)
        pts = np.concatenate(([u], cuts, [v]))
        for t0, t1 in zip(pts[:-1], pts[1:]):
            y_mid = a * (0.5 * (t0 + t1)) + b
            j = int(then.branch_index(np.clip(y_mid, 0.0, 1.0)))
            slopes.append(then.slopes[j] * a)
            intercepts.append(then.slopes[j] * b + then.intercepts[j])
            breaks.append(float(t1))
    breaks[-1] = 1.0
    return AxisBranches(np.array(breaks), np.array(slopes), np.array(intercepts))


@dataclass(frozen=True)
class JablonskiMap:
    """Coordinate-wise piecewise-affine map of the unit cube.

    On the cell with multi-index (s_1, ..., s_n) the image is
    (phi_1(x_1), ..., phi_n(x_n)) where phi_i is branch s_i of axes[i]; the
    i-th output never depends on the other coordinates.
    """

    axes: tuple[AxisBranches, ...]

    def __post_init__(self):
        if len(self.axes) == 0:
            raise EmptyAxis("map needs at least one axis")

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def partition(self) -> RectPartition:
        return RectPartition(tuple(a.breaks for a in self.axes))


@dataclass(frozen=True)
class ExpansionProfile:
    """Per-axis minimal branch expansion and its product."""

    per_axis: np.ndarray
    gamma: float


def evaluate_map(jmap: JablonskiMap, x) -> tuple[np.ndarray, np.ndarray]:
    """Image point and per-axis branch slopes at x (cell by half-open rule)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (jmap.n,):
        raise PointOutsideCube(f"expected a point in {jmap.n} dimensions")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise PointOutsideCube(f"point {x} outside the unit cube")
    y = np.empty(jmap.n)
    deriv = np.empty(jmap.n)
    for i, branches in enumerate(jmap.axes):
        s = int(branches.branch_index(x[i]))
        y[i] = branches.slopes[s] * x[i] + branches.intercepts[s]
        deriv[i] = branches.slopes[s]
    return np.clip(y, 0.0, 1.0), deriv


def evaluate_many(jmap: JablonskiMap, X: np.ndarray) -> np.ndarray:
    """Vectorized image of a batch of points, shape (m, n) -> (m, n)."""
    X = np.asarray(X, dtype=float)
    Y = np.empty_like(X)
    for i, branches in enumerate(jmap.axes):
        s = branches.branch_index(X[:, i])
        Y[:, i] = branches.slopes[s] * X[:, i] + branches.intercepts[s]
    return np.clip(Y, 0.0, 1.0)


def min_expansion(jmap: JablonskiMap) -> ExpansionProfile:
    """Per-axis minimum |slope| over branches; gamma is their product."""
    per_axis = np.array([a.min_abs_slope() for a in jmap.axes])
    return ExpansionProfile(per_axis=per_axis, gamma=float(np.prod(per_axis)))


def compose_maps(first: JablonskiMap, then: JablonskiMap) -> JablonskiMap:
    """The composition `then` ∘ `first` as a map over a refined partition."""
    return JablonskiMap(tuple(compose_axis(f, t) for f, t in zip(first.axes, then.axes)))


def interior_crossing_points(partition: RectPartition) -> np.ndarray:
    """All partition vertices strictly inside the cube, shape (c_t, n)."""
    interior = [b[1:-1] for b in partition.breaks]
    if any(arr.size == 0 for arr in interior):
        return np.empty((0, partition.n))
    return np.array(list(itertools.product(*interior)))
