"""Partitioned nearest-neighbor search over class buckets.

Each partition scans only its own block and emits, per sampled instance and
per class, its local top-k candidates as compact locators (partition index,
local index, distance).  The reduce step merges the per-partition lists into
global top-k buckets.  Shipping locators instead of full instances is the
point: the accounting fields on the returned table record exactly how many
records the map phase emitted and what the equivalent full-instance payload
would have been.

Distances are Euclidean over per-feature diffs: |a - b| for numeric values
(z-scored beforehand, or scaled lazily for sparse rows) and a 0/1 indicator
for nominal values.  Ties resolve by ascending (partition, local) address,
which equals ascending global row order because partitions are contiguous.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, FeatureKind, FeatureSpace, PartitionedDataset, SampleBatch
from .errors import DataError, IntegrityError

__all__ = [
    "NeighborLocator",
    "NeighborTable",
    "feature_diff",
    "instance_distance",
    "neighborhood",
    "LOCATOR_BYTES",
]

# Serialized locator: two 4-byte ints plus one 8-byte real.
LOCATOR_BYTES = 16
DENSE_VALUE_BYTES = 8
SPARSE_NONZERO_BYTES = 12

# At or above this feature count the dense kernel switches to the Gram
# expansion (||a||^2 + ||b||^2 - 2ab), which runs as one matmul.  The switch
# keys on the feature count alone so the partition layout can never change
# which kernel (and hence which floats) a dataset gets.
GRAM_MIN_FEATURES = 256

_QUERY_CHUNK = 128


@dataclass(frozen=True)
class NeighborLocator:
    """Address of one neighbor: partition, local offset, and distance."""

    partition_index: int
    local_index: int
    distance: float

    def sort_key(self):
        return (self.distance, self.partition_index, self.local_index)


@dataclass
class NeighborTable:
    """Merged top-k neighbor buckets for one batch.

    ``buckets`` maps a sampled instance's global row id to a per-class dict
    of at most ``k`` locators, sorted by (distance, partition, local).  The
    bucket for the instance's own class holds its near-hits; every other
    class bucket holds its near-misses from that class.
    """

    k: int
    buckets: dict
    emitted_records: int = 0
    emitted_bytes: int = 0
    full_instance_bytes: int = 0


def feature_diff(a: float, b: float, kind: FeatureKind) -> float:
    """Per-feature difference: |a - b| for numeric, 0/1 mismatch for nominal."""
    if FeatureKind(kind) is FeatureKind.NOMINAL:
        return 0.0 if a == b else 1.0
    return abs(a - b)


def _sparse_effective(row, space: FeatureSpace):
    idx, vals = row
    if space.inv_scale is None:
        return idx, vals
    return idx, vals * space.inv_scale[idx]


def _sparse_sq_dist(row_a, row_b, space: FeatureSpace) -> float:
    """Squared distance between two sparse rows by index merge."""
    ia, va = _sparse_effective(row_a, space)
    ib, vb = _sparse_effective(row_b, space)
    na = float(np.dot(va, va))
    nb = float(np.dot(vb, vb))
    common, pa, pb = np.intersect1d(ia, ib, assume_unique=True, return_indices=True)
    cross = float(np.dot(va[pa], vb[pb]))
    return max(na + nb - 2.0 * cross, 0.0)


def instance_distance(x, y, space: FeatureSpace) -> float:
    """Euclidean distance between two instances of the same feature space.

    Accepts dense rows (ndarray), sparse rows ((indices, values)), or one of
    each; sparse values are scaled through the recorded statistics so the
    result matches the distance between the z-scored dense equivalents.
    """
    x_sparse = not isinstance(x, np.ndarray)
    y_sparse = not isinstance(y, np.ndarray)
    if x_sparse and y_sparse:
        return math.sqrt(_sparse_sq_dist(x, y, space))
    if x_sparse or y_sparse:
        sp, dn = (x, y) if x_sparse else (y, x)
        if dn.shape[0] != space.n_features:
            raise DataError("dimension mismatch between instances")
        scale = space.inv_scale if space.inv_scale is not None else 1.0
        dn_eff = dn * scale
        idx, vals = _sparse_effective(sp, space)
        total = float(np.dot(dn_eff, dn_eff))
        # Replace the dense-only contribution at the sparse row's indices.
        delta = vals - dn_eff[idx]
        total += float(np.dot(delta, delta)) - float(np.dot(dn_eff[idx], dn_eff[idx]))
        return math.sqrt(max(total, 0.0))
    if x.shape != y.shape:
        raise DataError("dimension mismatch between instances")
    if space.all_numeric:
        d = x - y
        return math.sqrt(float((d * d).sum()))
    dn = x[space.numeric_idx] - y[space.numeric_idx]
    num = float((dn * dn).sum())
    nom = float((x[space.nominal_idx] != y[space.nominal_idx]).sum())
    return math.sqrt(num + nom)


# -- dense distance kernels -------------------------------------------------


def _dense_distances_subtract(Q, block, space: FeatureSpace) -> np.ndarray:
    """Row-wise subtract-and-square distances, same terms as the scalar path.

    The per-row reduction happens inside a 2-D block, where numpy may group
    the additions differently than a lone 1-D sum; the result can sit one
    ulp from the scalar value, so only order, not bits, is contractual.
    """
    out = np.empty((Q.shape[0], block.shape[0]))
    if space.all_numeric:
        for i in range(Q.shape[0]):
            d = block - Q[i]
            out[i] = (d * d).sum(axis=1)
        return out
    Bn = block[:, space.numeric_idx]
    Bc = block[:, space.nominal_idx]
    Qn = Q[:, space.numeric_idx]
    Qc = Q[:, space.nominal_idx]
    for i in range(Q.shape[0]):
        d = Bn - Qn[i]
        out[i] = (d * d).sum(axis=1) + (Bc != Qc[i]).sum(axis=1)
    return out


def _dense_distances_gram(Q, block, space: FeatureSpace, block_sq) -> np.ndarray:
    if space.all_numeric:
        Qn, Bn = Q, block
    else:
        Qn, Bn = Q[:, space.numeric_idx], block[:, space.numeric_idx]
    q_sq = (Qn * Qn).sum(axis=1)
    out = q_sq[:, None] + block_sq[None, :] - 2.0 * (Qn @ Bn.T)
    np.maximum(out, 0.0, out=out)
    if not space.all_numeric:
        Bc = block[:, space.nominal_idx]
        Qc = Q[:, space.nominal_idx]
        for i in range(Q.shape[0]):
            out[i] += (Bc != Qc[i]).sum(axis=1)
    return out


# -- partition map ----------------------------------------------------------


def _search_partition(pdata: PartitionedDataset, g: int, batch: SampleBatch,
                      k: int, space: FeatureSpace):
    """Local top-k per class bucket for every sampled instance.

    Returns (per-sample list of class->locator lists, emitted record count,
    hypothetical full-instance byte count for the same records).
    """
    ds = pdata.dataset
    start = int(pdata.starts[g])
    end = int(pdata.starts[g + 1])
    labels = ds.labels[start:end]
    members = {int(c): np.flatnonzero(labels == c) for c in np.unique(labels)}
    n_samples = len(batch)
    results = [dict() for _ in range(n_samples)]
    emitted = 0
    inst_bytes = 0

    if ds.is_sparse:
        block_rows = ds.rows[start:end]
        dist_chunk = None
    else:
        block = ds.rows[start:end]
        use_gram = ds.n_features >= GRAM_MIN_FEATURES
        if use_gram:
            Bn = block if space.all_numeric else block[:, space.numeric_idx]
            block_sq = (Bn * Bn).sum(axis=1)

    for lo in range(0, n_samples, _QUERY_CHUNK):
        hi = min(lo + _QUERY_CHUNK, n_samples)
        if ds.is_sparse:
            sq = np.empty((hi - lo, end - start))
            for i in range(lo, hi):
                qrow = batch.row(i)
                for j in range(end - start):
                    sq[i - lo, j] = _sparse_sq_dist(qrow, block_rows[j], space)
        else:
            Q = batch.rows[lo:hi]
            if use_gram:
                sq = _dense_distances_gram(Q, block, space, block_sq)
            else:
                sq = _dense_distances_subtract(Q, block, space)
        dist = np.sqrt(sq)
        for i in range(lo, hi):
            gid = int(batch.indices[i])
            drow = dist[i - lo]
            self_local = gid - start if start <= gid < end else -1
            for c, cand in members.items():
                dc = drow[cand]
                if self_local >= 0 and int(labels[self_local]) == c:
                    pos = np.searchsorted(cand, self_local)
                    if pos < cand.size and cand[pos] == self_local:
                        dc = dc.copy()
                        dc[pos] = np.inf
                order = np.lexsort((cand, dc))[:k]
                locs = []
                for o in order:
                    if not np.isfinite(dc[o]):
                        continue
                    locs.append(NeighborLocator(g, int(cand[o]), float(dc[o])))
                if locs:
                    results[i][c] = locs
                    emitted += len(locs)
                    if ds.is_sparse:
                        inst_bytes += sum(
                            SPARSE_NONZERO_BYTES * block_rows[l.local_index][0].size
                            for l in locs)
                    else:
                        inst_bytes += len(locs) * DENSE_VALUE_BYTES * ds.n_features
    return results, emitted, inst_bytes


def neighborhood(pdata: PartitionedDataset, batch: SampleBatch, k: int,
                 threads: int | None = None) -> NeighborTable:
    """Global top-k class buckets for every instance in the batch.

    Partitions are searched independently (in a thread pool) and their
    candidate lists merged; the merge sorts by (distance, partition, local)
    so its output does not depend on completion order.  A sampled instance
    is never its own neighbor (excluded by global row id, so exact
    duplicates stay eligible); a class with fewer than ``k`` candidates
    yields a short bucket.
    """
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    ds = pdata.dataset
    space = ds.feature_space()
    p = pdata.n_partitions
    if p == 1:
        parts = [_search_partition(pdata, 0, batch, k, space)]
    else:
        workers = threads or min(p, 8)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda g: _search_partition(pdata, g, batch, k, space), range(p)))

    emitted = sum(r[1] for r in parts)
    inst_bytes = sum(r[2] for r in parts)
    buckets = {}
    for i in range(len(batch)):
        gid = int(batch.indices[i])
        merged = {}
        for per_sample, _, _ in parts:
            for c, locs in per_sample[i].items():
                merged.setdefault(c, []).extend(locs)
        for c in merged:
            merged[c] = sorted(merged[c], key=NeighborLocator.sort_key)[:k]
        buckets[gid] = merged
    return NeighborTable(
        k=k,
        buckets=buckets,
        emitted_records=emitted,
        emitted_bytes=emitted * LOCATOR_BYTES,
        full_instance_bytes=inst_bytes,
    )
