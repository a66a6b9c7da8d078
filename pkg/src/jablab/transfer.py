"""Ulam discretization of transfer operators and cocycle composition.

For a coordinate-wise affine map and a grid refining its partition, the
cell-to-cell transition matrix P[k][j] = m(B_k ∩ f⁻¹(B_j)) / m(B_k) factors
as a Kronecker product of one-dimensional interval-overlap matrices, one per
axis.  Entries are exact (closed-form interval intersections); each row sums
to 1, so acting on mass vectors preserves total mass.

The operator acts on mass coordinates internally; GridFunction values are
densities, converted by the cell volumes on the way in and out.
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import GridNotRefining, WindowTooShort
from .geometry import JablonskiMap, RectPartition
from .driving import Driving, SymbolWindow
from .variation import GridFunction

ROWSUM_TOL = 1e-12
MASS_WARN_TOL = 1e-9


def _axis_factor(branches, grid_breaks: np.ndarray) -> sparse.csr_matrix:
    """1-D Ulam matrix of one coordinate map on one grid axis (rows = sources)."""
    g = grid_breaks.size - 1
    mids = 0.5 * (grid_breaks[:-1] + grid_breaks[1:])
    branch_of = branches.branch_index(mids)
    rows, cols, vals = [], [], []
    for k in range(g):
        s = branch_of[k]
        a, b = branches.slopes[s], branches.intercepts[s]
        y0, y1 = a * grid_breaks[k] + b, a * grid_breaks[k + 1] + b
        lo, hi = (y0, y1) if y0 <= y1 else (y1, y0)
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        j0 = max(int(np.searchsorted(grid_breaks, lo, side="right")) - 1, 0)
        j1 = min(int(np.searchsorted(grid_breaks, hi, side="left")) - 1, g - 1)
        j1 = max(j1, j0)
        width = hi - lo
        for j in range(j0, j1 + 1):
            ov = min(hi, grid_breaks[j + 1]) - max(lo, grid_breaks[j])
            if ov > 0.0:
                rows.append(k)
                cols.append(j)
                vals.append(ov / width)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(g, g))


@dataclass(frozen=True)
class UlamOperator:
    """Row-stochastic cell-transition operator on a tensor grid."""

    grid: RectPartition
    factors: tuple[sparse.csr_matrix, ...]
    matrix: sparse.csr_matrix

    def apply_mass(self, mass: np.ndarray) -> np.ndarray:
        """Push a flat mass vector forward one step."""
        return self.matrix.T @ mass

    def apply_density(self, f: GridFunction) -> GridFunction:
        vols = f.cell_volumes()
        mass = (f.values * vols).ravel()
        out = self.apply_mass(mass).reshape(f.grid.cells_per_axis)
        return GridFunction(f.grid, out / vols)

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def write_csv(self, path) -> None:
        """Dump nonzero entries as (source, target, entry) triples (1-based)."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["source", "target", "entry"])
            for i in order:
                writer.writerow([coo.row[i] + 1, coo.col[i] + 1, f"{coo.data[i]:.17g}"])


def ulam_matrix(jmap: JablonskiMap, grid: RectPartition) -> UlamOperator:
    """Exact Ulam operator of `jmap` on a grid refining its partition."""
    if not grid.is_refinement_of(jmap.partition):
        raise GridNotRefining("grid must contain every partition breakpoint")
    factors = tuple(
        _axis_factor(branches, breaks) for branches, breaks in zip(jmap.axes, grid.breaks)
    )
    matrix = factors[0]
    for fac in factors[1:]:
        matrix = sparse.kron(matrix, fac, format="csr")
    op = UlamOperator(grid=grid, factors=factors, matrix=sparse.csr_matrix(matrix))
    bad = np.max(np.abs(op.row_sums() - 1.0))
    if bad > ROWSUM_TOL:
        raise AssertionError(f"row sums off by {bad:.3e}; operator construction is broken")
    return op


def symbol_operators(driving: Driving, grid: RectPartition) -> dict[str, UlamOperator]:
    """One Ulam operator per symbol, built once."""
    return {s: ulam_matrix(driving.map_of(s), grid) for s in driving.symbols}


def apply_cocycle(
    driving: Driving,
    window: SymbolWindow,
    density: GridFunction,
    k: int,
    operators: dict[str, UlamOperator] | None = None,
) -> GridFunction:
    """k-step cocycle: the operator of offset 0 acts first, then offset 1, ...

    Warns (does not reject) if the input is not a probability density.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > window.k_future + 1:
        raise WindowTooShort(f"need symbols at offsets 0..{k - 1}, window ends at {window.k_future}")
    if abs(density.mass() - 1.0) > MASS_WARN_TOL or np.min(density.values) < 0:
        warnings.warn("input is not a probability density", stacklevel=2)
    ops = operators if operators is not None else symbol_operators(driving, density.grid)
    out = density
    for t in range(k):
        out = ops[window.symbol(t)].apply_density(out)
    return out


def transfer_pointwise(jmap: JablonskiMap, h: GridFunction, x) -> float:
    """Branch-sum value of the pushed density at a point off the grid lines.

    Sums h at each inverse-branch preimage of x, weighted by the product of
    inverse slope magnitudes, over branches whose image contains x.
    """
    x = np.asarray(x, dtype=float)
    per_axis: list[list[tuple[float, float]]] = []
    for i, branches in enumerate(jmap.axes):
        hits = []
        for s in range(branches.n_branches):
            lo, hi = branches.image(s)
            if lo <= x[i] < hi or (x[i] == hi == 1.0):
                pre = (x[i] - branches.intercepts[s]) / branches.slopes[s]
                hits.append((float(np.clip(pre, 0.0, 1.0)), 1.0 / abs(branches.slopes[s])))
        per_axis.append(hits)
    total = 0.0
    for combo in itertools.product(*per_axis):
        point = np.array([c[0] for c in combo])
        weight = float(np.prod([c[1] for c in combo]))
        total += h.value_at(point) * weight
    return total
