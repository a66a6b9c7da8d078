"""Random invariant densities, Lyapunov diagnostics, ACIP counting and basins.

The equivariant density at a base point is the limit of Cesaro averages of
backward pushforwards of the uniform density: h^k pushes 1 forward from k
steps in the past to the present, and H^s averages h^1..h^s.  Computing any
single H^s costs O(s) operator applications via the suffix recursion
A_i = L_i(seed + A_{i+1}) (the deepest operator acts first, so the plain
definition would cost O(s^2)); convergence is tested on the exact consecutive
increment ||H^s - H^{s-1}||_1 at geometrically spaced checkpoints.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .driving import Driving, SymbolWindow, expansion_integral, sample_window
from .errors import NotAdmissible, SeedNotInCell, WindowTooShort
from .geometry import JablonskiMap, RectPartition, evaluate_many
from .transfer import UlamOperator, symbol_operators
from .variation import GridFunction, bv_norm

MASS_TOL = 1e-9


# -- equivariant densities -------------------------------------------------------


@dataclass
class DensityFamily:
    """Settled densities at window offsets, with convergence metadata."""

    densities: dict[int, GridFunction]
    s_used: int
    final_increment: float
    raw_increment: float
    tol: float
    converged: bool


def _mass_matrices(ops: dict[str, UlamOperator]) -> dict[str, object]:
    return {s: op.matrix.T.tocsr() for s, op in ops.items()}


def _push_from_past(mass_ops, window: SymbolWindow, anchor: int, depth: int, seed_mass: np.ndarray) -> np.ndarray:
    """Mass of L_{anchor-1} ... L_{anchor-depth} applied to seed_mass."""
    vec = seed_mass
    for i in range(depth, 0, -1):
        vec = mass_ops[window.symbol(anchor - i)] @ vec
    return vec


def _cesaro_sum(mass_ops, window: SymbolWindow, anchor: int, depth: int, seed_mass: np.ndarray) -> np.ndarray:
    """Sum over k=1..depth of the k-step backward pushforwards (suffix recursion)."""
    acc = np.zeros_like(seed_mass)
    for i in range(depth, 0, -1):
        acc = mass_ops[window.symbol(anchor - i)] @ (seed_mass + acc)
    return acc


def _checkpoints(s_max: int, start: int = 8) -> list[int]:
    pts = []
    s = min(max(start, 2), s_max)
    while s < s_max:
        pts.append(s)
        s = max(s + 1, int(np.ceil(1.5 * s)))
    pts.append(s_max)
    return pts


def _settle_anchor(mass_ops, window, anchor, s_max, tol, seed_mass):
    """(Cesaro limit mass, s, increment, raw increment, converged)."""
    if s_max < 2:
        raise ValueError("s_max must be at least 2")
    for s in _checkpoints(s_max):
        total = _cesaro_sum(mass_ops, window, anchor, s, seed_mass)
        h_s = _push_from_past(mass_ops, window, anchor, s, seed_mass)
        h_prev = _push_from_past(mass_ops, window, anchor, s - 1, seed_mass)
        H_s = total / s
        H_prev = (total - h_s) / (s - 1)
        increment = float(np.sum(np.abs(H_s - H_prev)))
        raw = float(np.sum(np.abs(h_s - h_prev)))
        if increment < tol:
            return H_s, s, increment, raw, True
    return H_s, s, increment, raw, False


def equivariant_density(
    driving: Driving,
    window: SymbolWindow,
    s_max: int = 4000,
    tol: float = 1e-6,
    grid: RectPartition | None = None,
) -> DensityFamily:
    """Cesaro-averaged backward pushforwards at window offsets 0 and 1.

    Stops at the first checkpoint where ||H^s - H^{s-1}||_1 < tol, or at
    s_max with converged=False (diagnostic, not fatal).
    """
    gamma = expansion_integral(driving)
    if not gamma.admissible:
        raise NotAdmissible(f"average log expansion {gamma.value} <= 0")
    if window.k_past < s_max:
        raise WindowTooShort(f"need k_past >= s_max = {s_max}, window has {window.k_past}")
    if grid is None:
        grid = RectPartition.uniform(driving.partition.n, 64)
    mass_ops = _mass_matrices(symbol_operators(driving, grid))
    vols = grid.cell_volumes().ravel()
    densities: dict[int, GridFunction] = {}
    meta = None
    for anchor in (0, 1):
        mass, s_used, inc, raw, ok = _settle_anchor(
            mass_ops, window, anchor, s_max, tol, vols.copy()
        )
        densities[anchor] = GridFunction.from_flat(grid, mass / vols)
        if anchor == 0:
            meta = (s_used, inc, raw, ok)
    s_used, inc, raw, ok = meta
    if not ok:
        warnings.warn(
            f"Cesaro averages did not reach tol={tol} by s_max={s_max} (increment {inc:.3e})",
            stacklevel=2,
        )
    return DensityFamily(
        densities=densities,
        s_used=s_used,
        final_increment=inc,
        raw_increment=raw,
        tol=tol,
        converged=ok,
    )


def equivariance_residual(
    driving: Driving, window: SymbolWindow, family: DensityFamily
) -> float:
    """L1 residual of the equivariance relation between offsets 0 and 1."""
    h0 = family.densities[0]
    h1 = family.densities[1]
    op = symbol_operators(driving, h0.grid)[window.symbol(0)]
    return op.apply_density(h0).l1_distance(h1)


# -- maximal Lyapunov exponent -------------------------------------------------------


@dataclass
class LyapunovEstimate:
    lambda_hat: float
    k: int
    per_trial: list[float]


def lyapunov_max(
    driving: Driving,
    grid: RectPartition,
    k: int = 200,
    n_trials: int = 8,
    seed: int = 0,
    h0: GridFunction | None = None,
) -> LyapunovEstimate:
    """Per-step exponential growth rate of the BV norm along the cocycle."""
    gamma = expansion_integral(driving)
    if not gamma.admissible:
        raise NotAdmissible(f"average log expansion {gamma.value} <= 0")
    ops = symbol_operators(driving, grid)
    if h0 is None:
        h0 = GridFunction.uniform(grid)
    base = np.log(bv_norm(h0).norm)
    per_trial = []
    for trial in range(n_trials):
        window = sample_window(driving, seed=seed + 104_729 * (trial + 1), k_past=0, k_future=k)
        out = h0
        for t in range(k):
            out = ops[window.symbol(t)].apply_density(out)
        per_trial.append(float((np.log(bv_norm(out).norm) - base) / k))
    return LyapunovEstimate(
        lambda_hat=float(np.mean(per_trial)), k=k, per_trial=per_trial
    )


# -- cocycle exponent spectrum (QR) ------------------------------------------------


def cocycle_exponents(
    driving: Driving,
    grid: RectPartition,
    k: int = 200,
    n_exponents: int = 8,
    seed: int = 0,
) -> np.ndarray:
    """Leading Lyapunov exponents of the discretized operator cocycle.

    QR-orthogonalized power iteration on the mass-transfer matrices; the
    first half of the steps is burn-in (subspace alignment), log|R_jj| is
    accumulated over the second half.
    """
    mass_ops = _mass_matrices(symbol_operators(driving, grid))
    window = sample_window(driving, seed=seed, k_past=0, k_future=k)
    dim = grid.q
    m = min(n_exponents, dim)
    rng = np.random.default_rng(seed + 1)
    Q = np.empty((dim, m))
    Q[:, 0] = grid.cell_volumes().ravel()
    if m > 1:
        Q[:, 1:] = rng.standard_normal((dim, m - 1))
    Q, _ = np.linalg.qr(Q)
    burn = k // 2
    sums = np.zeros(m)
    counted = 0
    for t in range(k):
        Q = mass_ops[window.symbol(t)] @ Q
        Q, R = np.linalg.qr(Q)
        if t >= burn:
            sums += np.log(np.abs(np.diag(R)))
            counted += 1
    return sums / counted


# -- empirical ACIP counting ------------------------------------------------------


@dataclass
class AcipCount:
    r_hat: int
    representatives: list[GridFunction]
    d1_hat: int
    exponents: np.ndarray
    per_window_counts: list[int]
    stable: bool
    discrepancy: bool  # r_hat exceeding d1_hat


def _cluster(densities: list[GridFunction], tol: float) -> list[list[int]]:
    """Greedy first-linkage clustering by L1 distance."""
    clusters: list[list[int]] = []
    for i, f in enumerate(densities):
        for members in clusters:
            if f.l1_distance(densities[members[0]]) < tol:
                members.append(i)
                break
        else:
            clusters.append([i])
    return clusters


def _seed_densities(driving: Driving, grid: RectPartition, n_seeds: int) -> list[GridFunction]:
    """Normalized indicators of partition cells at evenly spread flat indices."""
    partition = driving.partition
    flat = np.unique(np.round(np.linspace(0, partition.q - 1, n_seeds)).astype(int))
    seeds = []
    for f in flat:
        idx = np.unravel_index(f, partition.cells_per_axis)
        lo, hi = partition.cell_box(idx)
        seeds.append(GridFunction.indicator(grid, lo, hi, normalize=True))
    return seeds


def count_acips(
    driving: Driving,
    grid: RectPartition,
    n_seeds: int = 8,
    n_windows: int = 2,
    k_settle: int = 200,
    cluster_tol: float = 1e-2,
    seed: int = 0,
) -> AcipCount:
    """Cluster settled backward limits of localized seeds; estimate multiplicity.

    d1_hat counts cocycle exponents within cluster_tol of zero (advisory).
    """
    gamma = expansion_integral(driving)
    if not gamma.admissible:
        raise NotAdmissible(f"average log expansion {gamma.value} <= 0")
    mass_ops = _mass_matrices(symbol_operators(driving, grid))
    vols = grid.cell_volumes().ravel()
    seeds = _seed_densities(driving, grid, n_seeds)
    counts = []
    first_window_settled: list[GridFunction] = []
    first_window_clusters: list[list[int]] = []
    for widx in range(n_windows):
        window = sample_window(
            driving, seed=seed + 15_485_863 * (widx + 1), k_past=k_settle, k_future=0
        )
        settled = []
        for g in seeds:
            mass = (g.values * grid.cell_volumes()).ravel()
            total = _cesaro_sum(mass_ops, window, 0, k_settle, mass)
            settled.append(GridFunction.from_flat(grid, (total / k_settle) / vols))
        clusters = _cluster(settled, cluster_tol)
        counts.append(len(clusters))
        if widx == 0:
            first_window_settled = settled
            first_window_clusters = clusters
    representatives = []
    for members in first_window_clusters:
        mean_vals = np.mean([first_window_settled[i].values for i in members], axis=0)
        representatives.append(GridFunction(grid, mean_vals).normalized())
    exponents = cocycle_exponents(
        driving, grid, k=max(k_settle, 64), n_exponents=max(8, len(representatives) + 2), seed=seed
    )
    d1_hat = int(np.sum(np.abs(exponents) < cluster_tol))
    r_hat = max(counts)
    return AcipCount(
        r_hat=r_hat,
        representatives=representatives,
        d1_hat=d1_hat,
        exponents=exponents,
        per_window_counts=counts,
        stable=len(set(counts)) == 1,
        discrepancy=r_hat > d1_hat,
    )


# -- physical-measure basins -----------------------------------------------------


@dataclass
class BasinEstimate:
    fractions: list[float]
    unresolved: float
    counts: list[int]
    n_points: int
    threshold: float


def _symbol_matrix(driving: Driving, n_points: int, n_steps: int, rng) -> np.ndarray:
    k = len(driving.symbols)
    if driving.kind == "iid":
        return rng.choice(k, size=(n_points, n_steps), p=driving.p)
    S = np.empty((n_points, n_steps), dtype=int)
    S[:, 0] = rng.choice(k, size=n_points, p=driving.pi)
    cum = np.cumsum(driving.transition, axis=1)
    for t in range(1, n_steps):
        u = rng.random(n_points)
        S[:, t] = (u[:, None] >= cum[S[:, t - 1]]).sum(axis=1)
    return S


def basin_estimate(
    driving: Driving,
    representatives: list[GridFunction],
    n_points: int = 1000,
    n_steps: int = 4000,
    seed: int = 0,
    compare_cells: int = 8,
    threshold: float = 0.25,
) -> BasinEstimate:
    """Assign Lebesgue-random starts to representatives by occupation histograms.

    Orbits are simulated under independently sampled symbol sequences; the
    empirical occupation measure of each orbit is compared to each
    representative in L1 on a coarse uniform grid, and the start is assigned
    to the nearest one (or to "unresolved" if none is closer than threshold).
    """
    n = driving.partition.n
    rng = np.random.default_rng(seed)
    X = rng.random((n_points, n))
    S = _symbol_matrix(driving, n_points, n_steps, rng)
    coarse = RectPartition.uniform(n, compare_cells)
    coarse_q = compare_cells**n
    counts = np.zeros((n_points, coarse_q), dtype=np.int64)
    row = np.arange(n_points)
    maps = [driving.map_of(s) for s in driving.symbols]
    for t in range(n_steps):
        cell = np.minimum((X * compare_cells).astype(int), compare_cells - 1)
        flat = np.ravel_multi_index(cell.T, (compare_cells,) * n)
        np.add.at(counts, (row, flat), 1)
        for a in range(len(maps)):
            mask = S[:, t] == a
            if np.any(mask):
                X[mask] = evaluate_many(maps[a], X[mask])
    coarse_vol = 1.0 / coarse_q
    hist = counts / (n_steps * coarse_vol)
    reps = np.stack([r.project(coarse).values.ravel() for r in representatives])
    dists = np.abs(hist[:, None, :] - reps[None, :, :]).sum(axis=2) * coarse_vol
    nearest = np.argmin(dists, axis=1)
    resolved = dists[row, nearest] < threshold
    tallies = [int(np.sum(resolved & (nearest == i))) for i in range(len(representatives))]
    return BasinEstimate(
        fractions=[c / n_points for c in tallies],
        unresolved=float(np.sum(~resolved)) / n_points,
        counts=tallies,
        n_points=n_points,
        threshold=threshold,
    )


# -- rectangle propagation -------------------------------------------------------


@dataclass
class RectangleTrajectory:
    """Axis-aligned boxes pushed through the window's maps and clipped to cells."""

    boxes: list[tuple[np.ndarray, np.ndarray]]
    volumes: list[float]
    crossing_counts: list[int]
    first_hit_step: int | None  # map applications until a crossing point is interior
    symbols: list[str]


def propagate_rectangle(
    driving: Driving,
    window: SymbolWindow,
    lo,
    hi,
    max_steps: int = 20,
) -> RectangleTrajectory:
    """Iterate image-then-clip: the next box is the image intersected with the
    partition cell of largest overlap (ties to the lowest cell index)."""
    partition = driving.partition
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise SeedNotInCell("seed box must have positive volume")
    if max_steps > window.k_future + 1:
        raise WindowTooShort(f"need symbols at offsets 0..{max_steps - 1}")
    cell = partition.locate(0.5 * (lo + hi))
    c_lo, c_hi = partition.cell_box(cell)
    if np.any(lo < c_lo - 1e-12) or np.any(hi > c_hi + 1e-12):
        raise SeedNotInCell("seed box spans more than one partition cell")
    boxes = [(lo.copy(), hi.copy())]
    volumes = [float(np.prod(hi - lo))]
    crossing_counts: list[int] = []
    symbols: list[str] = []
    first_hit = None
    for s in range(max_steps):
        name = window.symbol(s)
        jmap = driving.map_of(name)
        symbols.append(name)
        cur_lo, cur_hi = boxes[-1]
        cell = partition.locate(0.5 * (cur_lo + cur_hi))
        img_lo = np.empty(partition.n)
        img_hi = np.empty(partition.n)
        for i, branches in enumerate(jmap.axes):
            a, b = branches.slopes[cell[i]], branches.intercepts[cell[i]]
            y0, y1 = a * cur_lo[i] + b, a * cur_hi[i] + b
            img_lo[i], img_hi[i] = (y0, y1) if y0 <= y1 else (y1, y0)
        count = 1
        for i in range(partition.n):
            interior = partition.breaks[i][1:-1]
            count *= int(np.sum((img_lo[i] < interior) & (interior < img_hi[i])))
        crossing_counts.append(count)
        if count >= 1 and first_hit is None:
            first_hit = s + 1
        new_lo = np.empty(partition.n)
        new_hi = np.empty(partition.n)
        for i in range(partition.n):
            b = partition.breaks[i]
            overlaps = np.maximum(
                np.minimum(b[1:], img_hi[i]) - np.maximum(b[:-1], img_lo[i]), 0.0
            )
            j = int(np.argmax(overlaps))
            new_lo[i] = max(img_lo[i], b[j])
            new_hi[i] = min(img_hi[i], b[j + 1])
        boxes.append((new_lo, new_hi))
        volumes.append(float(np.prod(new_hi - new_lo)))
    return RectangleTrajectory(
        boxes=boxes,
        volumes=volumes,
        crossing_counts=crossing_counts,
        first_hit_step=first_hit,
        symbols=symbols,
    )
