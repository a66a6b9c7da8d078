"""Shared map and ensemble constructions used across the suite."""

import math

import numpy as np
import pytest

from jablab.geometry import AxisBranches, JablonskiMap, RectPartition, refining_grid
from jablab.driving import build_driving


def mod_axis(k: int, breaks=None) -> AxisBranches:
    """Branches of t -> k*t mod 1 over `breaks` (which must contain all j/k)."""
    if breaks is None:
        breaks = np.linspace(0.0, 1.0, k + 1)
    breaks = np.asarray(breaks, dtype=float)
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    m = np.floor(k * mids)
    return AxisBranches(breaks, np.full(breaks.size - 1, float(k)), -m)


def affine_axis(breaks, pairs) -> AxisBranches:
    """AxisBranches from explicit (slope, intercept) pairs."""
    slopes = np.array([p[0] for p in pairs], dtype=float)
    intercepts = np.array([p[1] for p in pairs], dtype=float)
    return AxisBranches(np.asarray(breaks, dtype=float), slopes, intercepts)


def product_map(*axes: AxisBranches) -> JablonskiMap:
    return JablonskiMap(tuple(axes))


def doubling_axis(breaks=None) -> AxisBranches:
    return mod_axis(2, breaks)


def tripling_axis(breaks=None) -> AxisBranches:
    return mod_axis(3, breaks)


def tent_axis() -> AxisBranches:
    """Tent map: 2t on [0, 1/2), 2 - 2t on [1/2, 1]."""
    return affine_axis([0.0, 0.5, 1.0], [(2.0, 0.0), (-2.0, 2.0)])


def half_doubling_axis() -> AxisBranches:
    """Doubling within each half: [0,1/2) and [1/2,1] are invariant."""
    return affine_axis(
        [0.0, 0.25, 0.5, 0.75, 1.0],
        [(2.0, 0.0), (2.0, -0.5), (2.0, -1.0), (2.0, -1.5)],
    )


def skewed_doubling_axis(cut: float = 0.45) -> AxisBranches:
    """Two full branches with unequal slopes 1/cut and 1/(1-cut)."""
    return affine_axis(
        [0.0, cut, 1.0],
        [(1.0 / cut, 0.0), (1.0 / (1.0 - cut), -cut / (1.0 - cut))],
    )


@pytest.fixture
def tripling2() -> JablonskiMap:
    return product_map(tripling_axis(), tripling_axis())


@pytest.fixture
def doubling2() -> JablonskiMap:
    return product_map(doubling_axis(), doubling_axis())


def tripling2_driving():
    m = product_map(tripling_axis(), tripling_axis())
    return build_driving({"T": m}, p=[1.0])


def two_halves_driving():
    """Axis 1 keeps each half invariant; axis 2 is the doubling map."""
    m = product_map(half_doubling_axis(), doubling_axis())
    return build_driving({"H": m}, p=[1.0])


def four_block_driving():
    """Both axes keep their halves invariant: four invariant quadrants."""
    m = product_map(half_doubling_axis(), half_doubling_axis())
    return build_driving({"Q": m}, p=[1.0])


def common_breaks_2_3() -> np.ndarray:
    """Common refinement of the doubling and tripling partitions."""
    return np.array([0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0])


def mix_driving(p=(0.5, 0.5)):
    """i.i.d. mixture of doubling^2 and tripling^2 on their common partition."""
    breaks = common_breaks_2_3()
    D = product_map(doubling_axis(breaks), doubling_axis(breaks))
    T = product_map(tripling_axis(breaks), tripling_axis(breaks))
    return build_driving({"D": D, "T": T}, p=list(p), symbols=["D", "T"])


def skewed_mix_driving(cut: float = 0.45):
    """Admissible mixture whose invariant densities are not Lebesgue."""
    breaks = sorted({0.0, 1.0 / 3.0, cut, 2.0 / 3.0, 1.0})
    segs = np.asarray(list(breaks))

    def skew_on(b):
        b = np.asarray(b, dtype=float)
        mids = 0.5 * (b[:-1] + b[1:])
        slopes, intercepts = [], []
        for mid in mids:
            if mid < cut:
                slopes.append(1.0 / cut)
                intercepts.append(0.0)
            else:
                slopes.append(1.0 / (1.0 - cut))
                intercepts.append(-cut / (1.0 - cut))
        return AxisBranches(b, np.array(slopes), np.array(intercepts))

    S = product_map(skew_on(segs), skew_on(segs))
    T = product_map(tripling_axis(segs), tripling_axis(segs))
    return build_driving({"S": S, "T": T}, p=[0.5, 0.5], symbols=["S", "T"])


def grid_for(driving_or_map, target: int = 64) -> RectPartition:
    partition = (
        driving_or_map.partition
        if hasattr(driving_or_map, "partition")
        else driving_or_map
    )
    return refining_grid(partition, target)
