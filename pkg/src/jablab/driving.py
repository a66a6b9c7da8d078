"""Base dynamics: a stationary finite-alphabet symbol process selecting maps.

Two laws are supported: i.i.d. draws from a probability vector (two-sided
Bernoulli shift) and a two-sided stationary Markov chain with an irreducible
row-stochastic transition matrix.  Windows of symbols stand in for a base
point: index 0 is "now", negative indices reach into the past (used by
backward density constructions), positive ones into the future (cocycles).

Each window index draws its own uniform from a counter-based stream keyed by
(seed, index), so re-sampling with a longer window extends the shorter one
bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import NotAdmissible, NotErgodic, PartitionMismatch, ProbabilitiesInvalid
from .geometry import JablonskiMap, min_expansion

PROB_TOL = 1e-12
LOG3 = math.log(3.0)


def _uniform_at(seed: int, index: int) -> float:
    """Deterministic uniform for window index `index` (order-independent)."""
    counter = [index + 2**62, 0, 0, 0]
    return float(np.random.Generator(np.random.Philox(key=seed, counter=counter)).random())


def _stationary_vector(P: np.ndarray) -> np.ndarray:
    """Solve pi P = pi, sum(pi) = 1 for an irreducible row-stochastic P."""
    k = P.shape[0]
    A = P.T - np.eye(k)
    A[-1, :] = 1.0
    rhs = np.zeros(k)
    rhs[-1] = 1.0
    return np.linalg.solve(A, rhs)


@dataclass(frozen=True)
class Driving:
    """Finite ensemble of maps with a stationary symbol law.

    kind is "iid" or "markov".  `p` holds the i.i.d. law; `transition` and
    `pi` the Markov kernel and its stationary vector.  `law` is the common
    stationary marginal used for all exact integrals over the process.
    """

    symbols: tuple[str, ...]
    maps: Mapping[str, JablonskiMap]
    kind: str
    p: np.ndarray | None = None
    transition: np.ndarray | None = None
    pi: np.ndarray | None = None

    @property
    def law(self) -> np.ndarray:
        return self.p if self.kind == "iid" else self.pi

    @property
    def partition(self):
        return self.maps[self.symbols[0]].partition

    def map_of(self, symbol: str) -> JablonskiMap:
        return self.maps[symbol]


@dataclass(frozen=True)
class SymbolWindow:
    """Symbols at offsets -k_past..k_future around a base index, reproducible by seed."""

    symbols: tuple[str, ...]
    k_past: int
    k_future: int
    seed: int

    def symbol(self, offset: int) -> str:
        if not -self.k_past <= offset <= self.k_future:
            raise IndexError(f"offset {offset} outside window [{-self.k_past}, {self.k_future}]")
        return self.symbols[offset + self.k_past]


def _check_prob_vector(p: np.ndarray, what: str) -> None:
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise ProbabilitiesInvalid(f"{what} must be nonnegative and sum to 1")


def build_driving(
    maps: Mapping[str, JablonskiMap],
    *,
    p: Sequence[float] | None = None,
    transition: Sequence[Sequence[float]] | None = None,
    symbols: Sequence[str] | None = None,
) -> Driving:
    """Assemble and validate a driving from per-symbol maps and a law.

    Exactly one of `p` (i.i.d.) or `transition` (Markov) must be given.  All
    maps must share one common partition.
    """
    if not maps:
        raise ProbabilitiesInvalid("need at least one symbol")
    names = tuple(symbols) if symbols is not None else tuple(maps.keys())
    ref = maps[names[0]].partition
    for name in names:
        other = maps[name].partition
        if len(other.breaks) != len(ref.breaks) or not all(
            np.array_equal(a, b) for a, b in zip(other.breaks, ref.breaks)
        ):
            raise PartitionMismatch(f"map {name!r} is not on the common partition")
    if (p is None) == (transition is None):
        raise ProbabilitiesInvalid("give exactly one of p= or transition=")
    if p is not None:
        p = np.asarray(p, dtype=float)
        if p.shape != (len(names),):
            raise ProbabilitiesInvalid("p must have one entry per symbol")
        _check_prob_vector(p, "p")
        return Driving(symbols=names, maps=dict(maps), kind="iid", p=p)
    P = np.asarray(transition, dtype=float)
    if P.shape != (len(names), len(names)):
        raise ProbabilitiesInvalid("transition must be square, one row per symbol")
    for row in P:
        _check_prob_vector(row, "each transition row")
    n_comp, _ = connected_components(P > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise NotErgodic("transition matrix is reducible")
    pi = _stationary_vector(P)
    if np.any(pi < -PROB_TOL) or np.max(np.abs(pi @ P - pi)) > PROB_TOL:
        raise NotErgodic("failed to compute a valid stationary vector")
    return Driving(symbols=names, maps=dict(maps), kind="markov", transition=P, pi=pi)


def sample_window(driving: Driving, seed: int, k_past: int, k_future: int) -> SymbolWindow:
    """Draw a stationary two-sided symbol window.

    Index 0 is drawn from the stationary law; positive indices extend forward
    with the transition kernel, negative ones backward with the time-reversed
    kernel, each index consuming its own dedicated uniform.
    """
    if k_past < 0 or k_future < 0:
        raise ValueError("window lengths must be nonnegative")
    k = len(driving.symbols)
    cum_law = np.cumsum(driving.law)
    out: dict[int, int] = {0: int(np.searchsorted(cum_law, _uniform_at(seed, 0), side="right"))}
    if driving.kind == "iid":
        for t in range(-k_past, k_future + 1):
            if t != 0:
                out[t] = int(np.searchsorted(cum_law, _uniform_at(seed, t), side="right"))
    else:
        P = driving.transition
        pi = driving.pi
        # time-reversed kernel: P_rev[a, b] = pi[b] P[b, a] / pi[a]
        P_rev = (pi[None, :] * P.T) / pi[:, None]
        cum_fwd = np.cumsum(P, axis=1)
        cum_rev = np.cumsum(P_rev, axis=1)
        for t in range(1, k_future + 1):
            out[t] = int(np.searchsorted(cum_fwd[out[t - 1]], _uniform_at(seed, t), side="right"))
        for t in range(-1, -k_past - 1, -1):
            out[t] = int(np.searchsorted(cum_rev[out[t + 1]], _uniform_at(seed, t), side="right"))
    names = tuple(driving.symbols[out[t]] for t in range(-k_past, k_future + 1))
    return SymbolWindow(symbols=names, k_past=k_past, k_future=k_future, seed=seed)


class ExpansionIntegral(NamedTuple):
    value: float
    admissible: bool


def expansion_integral(driving: Driving) -> ExpansionIntegral:
    """Exact average of min_i log(gamma_i) over the stationary law."""
    total = 0.0
    for weight, symbol in zip(driving.law, driving.symbols):
        profile = min_expansion(driving.map_of(symbol))
        total += float(weight) * float(np.min(np.log(profile.per_axis)))
    return ExpansionIntegral(value=total, admissible=total > 0.0)


def choose_block_N(gamma: float) -> int:
    """Smallest N >= 1 with N * gamma > log 3 (strict)."""
    if gamma <= 0.0:
        raise NotAdmissible(f"average log expansion {gamma} is not positive")
    N = max(1, math.ceil(LOG3 / gamma))
    if N * gamma <= LOG3:
        N += 1
    return N
