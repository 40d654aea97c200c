"""Collision accounting between neighboring instances and the redundancy
measure computed from it.

Two instances "collide" on a numeric feature when their z-scored values fall
within six standard units of each other; the collision rate decays linearly
from 1 at zero gap to 0 at six units, and rates in the open interval
(0, kappa) are discarded so only strong collisions accumulate.  Nominal
features collide exactly on equal codes (0/1, no kappa window).

Marginal mass is accumulated for every feature on every processed pair.
Joint mass is accumulated only for pairs involving at least one *tracked*
feature (the relevance-windowed set), as min(rate_i, rate_j) when both
features collide.  The final measure for a feature pair is

    min(PC_i, PC_j) * log2(PC_ij / (PC_i * PC_j))

with PC values the accumulated masses divided by the pair count, and 0
whenever any involved mass is 0.  Taking the smaller marginal as the prefix
keeps the measure exactly symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, IntegrityError
from .dataset import FeatureKind, FeatureSpace

__all__ = [
    "COLLISION_SPAN",
    "BOOTSTRAP_TRACK_LIMIT",
    "collision_rate",
    "CollisionTables",
    "RedundancyTable",
    "compute_mcr",
    "eta_tracked",
    "bootstrap_tracked",
]

COLLISION_SPAN = 6.0
# Batch 1 tracks all pairs up to this many features; above it, the first
# batch records marginals only and joint tracking starts at batch 2.
BOOTSTRAP_TRACK_LIMIT = 5000


def collision_rate(a: float, b: float, kind: FeatureKind, kappa: float = 0.8) -> float:
    """Collision rate of one value pair; see the module docstring."""
    if FeatureKind(kind) is FeatureKind.NOMINAL:
        return 1.0 if a == b else 0.0
    rate = max(0.0, 1.0 - abs(a - b) / COLLISION_SPAN)
    if 0.0 < rate < kappa:
        return 0.0
    return rate


def _rates_from_diffs(diffs: np.ndarray, nominal_idx: np.ndarray,
                      kappa: float) -> np.ndarray:
    """Vectorized collision rates from absolute per-feature diffs."""
    rates = 1.0 - diffs / COLLISION_SPAN
    np.maximum(rates, 0.0, out=rates)
    rates[(rates > 0.0) & (rates < kappa)] = 0.0
    if nominal_idx.size:
        # Nominal diffs are 0/1 indicators: equal -> 1, different -> 0.
        rates[nominal_idx] = 1.0 - diffs[nominal_idx]
    return rates


@dataclass
class CollisionTables:
    """Accumulated collision mass: marginal per feature, joint per pair.

    ``joint[r, j]`` holds the mass of the unordered pair {tracked[r], j}.
    Within one update a pair is written once (both-tracked pairs go to the
    lower-index row), but after merging tables with different tracked sets
    the mass of a pair may be spread over both orientations; ``pair_mass``
    sums them.
    """

    n_features: int
    tracked: np.ndarray
    joint: np.ndarray
    marginal: np.ndarray
    pair_count: int = 0

    @classmethod
    def empty(cls, n_features: int, tracked=()) -> "CollisionTables":
        tracked = np.asarray(sorted(set(int(t) for t in tracked)), dtype=np.int64)
        if tracked.size and (tracked[0] < 0 or tracked[-1] >= n_features):
            raise DataError("tracked feature index out of range")
        return cls(
            n_features=n_features,
            tracked=tracked,
            joint=np.zeros((tracked.size, n_features)),
            marginal=np.zeros(n_features),
            pair_count=0,
        )

    def add_pair_rates(self, rates: np.ndarray) -> None:
        """Fold one instance pair's collision-rate vector into the tables."""
        if rates.shape[0] != self.n_features:
            raise IntegrityError("rate vector does not match feature count")
        self.marginal += rates
        self.pair_count += 1
        t = self.tracked.size
        if not t:
            return
        # Runs once per (sample, neighbor) visit; with thousands of tracked
        # features the per-visit temporaries dominated the runtime, so the
        # update buffer is kept and reused.
        buf = getattr(self, "_update_buf", None)
        if buf is None or buf.shape != (t, self.n_features):
            buf = np.empty((t, self.n_features))
            self._update_buf = buf
        np.minimum.outer(rates[self.tracked], rates, out=buf)
        first = int(self.tracked[0])
        if int(self.tracked[-1]) - first + 1 == t:
            # Contiguous tracked run: the pair-once region of row r is a
            # prefix slice, cheaper to zero than masking the full square.
            for r in range(t):
                buf[r, first:first + r + 1] = 0.0
        else:
            square = buf[:, self.tracked]
            buf[:, self.tracked] = np.triu(square, k=1)
        self.joint += buf

    def merge(self, other: "CollisionTables") -> "CollisionTables":
        """Entrywise sum; tracked sets are unioned with rows realigned."""
        if self.n_features != other.n_features:
            raise IntegrityError("cannot merge tables over different feature counts")
        tracked = np.union1d(self.tracked, other.tracked)
        joint = np.zeros((tracked.size, self.n_features))
        for src in (self, other):
            if src.tracked.size:
                rows = np.searchsorted(tracked, src.tracked)
                joint[rows] += src.joint
        return CollisionTables(
            n_features=self.n_features,
            tracked=tracked,
            joint=joint,
            marginal=self.marginal + other.marginal,
            pair_count=self.pair_count + other.pair_count,
        )

    def pair_mass(self, i: int, j: int) -> float:
        """Accumulated joint mass of the unordered pair {i, j}."""
        if i == j:
            raise DataError("joint mass is defined for distinct features")
        total = 0.0
        for a, b in ((i, j), (j, i)):
            r = np.searchsorted(self.tracked, a)
            if r < self.tracked.size and self.tracked[r] == a:
                total += self.joint[r, b]
        return total


def update_collisions(tables: CollisionTables, sample_row, neighbor_row,
                      space: FeatureSpace, kappa: float = 0.8,
                      diffs: np.ndarray | None = None) -> None:
    """Record the collisions of one (sample, neighbor) pair.

    ``diffs`` takes the absolute per-feature differences already computed by
    the weight-estimation pass so that collision tracking adds no distance
    work of its own; without it the diffs are derived here from the rows.
    """
    if diffs is None:
        from .estimation import pair_diffs
        diffs = pair_diffs(sample_row, neighbor_row, space)
    if isinstance(diffs, tuple):
        idx, vals = diffs
        rates = np.ones(tables.n_features)
        local = 1.0 - vals / COLLISION_SPAN
        np.maximum(local, 0.0, out=local)
        local[(local > 0.0) & (local < kappa)] = 0.0
        rates[idx] = local
    else:
        rates = _rates_from_diffs(diffs, space.nominal_idx, kappa)
    tables.add_pair_rates(rates)


@dataclass
class RedundancyTable:
    """Pairwise redundancy values with the bounds used for normalization.

    Pairs that were never tracked (or whose measure is exactly 0) are not
    stored; they contribute a raw value of 0.  ``normalized`` rescales the
    raw value through minmax bounds that always include the zero point.
    """

    n_features: int
    values: dict = field(default_factory=dict)
    lo: float = 0.0
    hi: float = 0.0

    def raw(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        return self.values.get((i, j), 0.0)

    def normalized(self, i: int, j: int) -> float:
        span = self.hi - self.lo
        if span <= 0.0:
            return 0.0
        return (self.raw(i, j) - self.lo) / span


def compute_mcr(tables: CollisionTables) -> RedundancyTable:
    """Turn accumulated collision mass into the pairwise redundancy table."""
    if tables.pair_count <= 0:
        raise DataError("no instance pairs were processed")
    pc = tables.marginal / tables.pair_count
    n = tables.n_features
    rows, cols = np.nonzero(tables.joint)
    if rows.size == 0:
        return RedundancyTable(n_features=n)
    i = tables.tracked[rows]
    key = np.minimum(i, cols) * n + np.maximum(i, cols)
    # Stable sort keeps the row-major scan order, so a pair split over two
    # orientations by a merge accumulates its mass in the same order the
    # plain scan would.
    order = np.argsort(key, kind="stable")
    key = key[order]
    uniq, start = np.unique(key, return_index=True)
    mass = np.add.reduceat(tables.joint[rows, cols][order], start)
    ui = uniq // n
    uj = uniq % n
    pij = mass / tables.pair_count
    ok = (pij > 0.0) & (pc[ui] > 0.0) & (pc[uj] > 0.0)
    ui, uj = ui[ok], uj[ok]
    v = np.minimum(pc[ui], pc[uj]) * np.log2(pij[ok] / (pc[ui] * pc[uj]))
    keep = v != 0.0
    values = {(int(a), int(b)): float(x)
              for a, b, x in zip(ui[keep], uj[keep], v[keep])}
    lo = min(0.0, float(v.min()) if v.size else 0.0)
    hi = max(0.0, float(v.max()) if v.size else 0.0)
    return RedundancyTable(n_features=n, values=values, lo=lo, hi=hi)


def eta_tracked(scores: np.ndarray, n_select: int, eta: float = 2.0) -> np.ndarray:
    """Indices of the top ceil(n_select * eta) features by score.

    Ties break toward the lower feature index; the result is sorted
    ascending.  ``eta`` large enough to cover every feature saturates
    tracking (all pairs observed).
    """
    if n_select < 1:
        raise DataError(f"selection size must be >= 1, got {n_select}")
    if eta <= 0.0:
        raise DataError(f"eta must be positive, got {eta}")
    n = scores.shape[0]
    count = min(n, math.ceil(n_select * eta))
    order = np.lexsort((np.arange(n), -scores))[:count]
    return np.sort(order).astype(np.int64)


def bootstrap_tracked(n_features: int) -> np.ndarray:
    """Tracked set for the first batch, before any relevance ranking exists."""
    if n_features <= BOOTSTRAP_TRACK_LIMIT:
        return np.arange(n_features, dtype=np.int64)
    return np.array([], dtype=np.int64)
