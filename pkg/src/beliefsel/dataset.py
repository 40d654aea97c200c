"""Dataset ingestion, normalization, partitioning, and sampling.

Responsibilities:
    * parse LibSVM (sparse) and headed CSV (dense) files into a Dataset,
    * z-score numeric features with population statistics,
    * split a Dataset into balanced contiguous partitions,
    * draw a uniform sample without replacement and cut it into batches.

Values of nominal features are stored as integer codes (first-appearance
order); labels are integer class ids ``0..n_classes-1``.  Sparse rows are
kept as (indices, values) pairs and are z-scored lazily at distance time
through the recorded per-feature statistics, so sparsity is never destroyed.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "FeatureKind",
    "FeatureSpace",
    "Dataset",
    "PartitionedDataset",
    "SampleBatch",
    "parse_libsvm",
    "parse_csv",
    "write_libsvm",
    "write_csv",
    "write_metadata",
    "read_metadata",
    "zscore_normalize",
    "partition",
    "draw_sample",
]


class FeatureKind(str, enum.Enum):
    NUMERIC = "numeric"
    NOMINAL = "nominal"


# Sparse row: (ascending unique int64 indices, float64 values).
SparseRow = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class FeatureSpace:
    """Static view of a feature space used by distance and diff kernels.

    ``inv_scale`` is the per-feature multiplier applied to raw value
    differences of lazily normalized sparse data (1/sigma); it is all ones
    for unnormalized data and ``None`` for dense data, whose stored values
    are already transformed.
    """

    n_features: int
    numeric_idx: np.ndarray
    nominal_idx: np.ndarray
    inv_scale: np.ndarray | None

    @property
    def all_numeric(self) -> bool:
        return self.nominal_idx.size == 0


class Dataset:
    """In-memory labeled dataset, dense or sparse.

    Parameters
    ----------
    rows : ndarray of shape (m, n) or list of SparseRow
        Feature values.  Nominal columns hold integer codes.
    labels : ndarray of shape (m,)
        Integer class ids in ``0..n_classes-1``.
    kinds : sequence of FeatureKind
        Per-feature kind; sparse datasets must be all numeric.
    """

    def __init__(self, rows, labels, kinds, n_classes=None,
                 means=None, stds=None, normalized=False):
        labels = np.asarray(labels, dtype=np.int64)
        if isinstance(rows, np.ndarray):
            rows = np.ascontiguousarray(rows, dtype=np.float64)
            if rows.ndim != 2:
                raise DataError("dense rows must be a 2-D array")
            self._sparse = False
            n = rows.shape[1]
            m = rows.shape[0]
        else:
            rows = list(rows)
            self._sparse = True
            n = 0
            for idx, vals in rows:
                if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0):
                    raise DataError("sparse indices must be ascending and unique")
                if idx.size:
                    n = max(n, int(idx[-1]) + 1)
            m = len(rows)
        kinds = tuple(FeatureKind(k) for k in kinds)
        if not self._sparse and len(kinds) != n:
            raise DataError(f"kinds has {len(kinds)} entries for {n} features")
        if self._sparse:
            if any(k is not FeatureKind.NUMERIC for k in kinds):
                raise DataError("sparse datasets must be all numeric")
            n = max(n, len(kinds))
            kinds = tuple(kinds) + (FeatureKind.NUMERIC,) * (n - len(kinds))
        if labels.shape != (m,):
            raise DataError("labels must be one id per instance")
        if m and labels.min() < 0:
            raise DataError("labels must be nonnegative class ids")
        self.rows = rows
        self.labels = labels
        self.kinds = kinds
        self.n_features = n
        self.n_classes = int(n_classes) if n_classes is not None else (
            int(labels.max()) + 1 if m else 0)
        if m and labels.max() >= self.n_classes:
            raise DataError("label id outside 0..n_classes-1")
        self.means = means
        self.stds = stds
        self.normalized = bool(normalized)

    # -- basic accessors ---------------------------------------------------

    @property
    def n_instances(self) -> int:
        return self.labels.shape[0]

    @property
    def is_sparse(self) -> bool:
        return self._sparse

    def numeric_mask(self) -> np.ndarray:
        return np.array([k is FeatureKind.NUMERIC for k in self.kinds], dtype=bool)

    def class_priors(self) -> np.ndarray:
        """Class frequencies over the full dataset."""
        if self.n_instances == 0:
            raise DataError("empty dataset has no priors")
        counts = np.bincount(self.labels, minlength=self.n_classes)
        return counts / self.n_instances

    def feature_space(self) -> FeatureSpace:
        mask = self.numeric_mask()
        if self._sparse:
            if self.normalized and self.stds is not None:
                inv = 1.0 / self.stds
            else:
                inv = np.ones(self.n_features)
        else:
            inv = None
        return FeatureSpace(
            n_features=self.n_features,
            numeric_idx=np.flatnonzero(mask),
            nominal_idx=np.flatnonzero(~mask),
            inv_scale=inv,
        )

    def row(self, i: int):
        return self.rows[i]

    def column(self, j: int) -> np.ndarray:
        """Effective (post-normalization) values of feature ``j`` as a dense vector."""
        if not 0 <= j < self.n_features:
            raise DataError(f"feature index {j} out of range")
        if not self._sparse:
            return self.rows[:, j].copy()
        col = np.zeros(self.n_instances)
        for i, (idx, vals) in enumerate(self.rows):
            pos = np.searchsorted(idx, j)
            if pos < idx.size and idx[pos] == j:
                col[i] = vals[pos]
        if self.normalized and self.means is not None:
            col = (col - self.means[j]) / self.stds[j]
        return col

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """New Dataset restricted to the given instances (order preserved)."""
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self.n_instances):
            raise DataError("subset index out of range")
        if self._sparse:
            rows = [(self.rows[i][0].copy(), self.rows[i][1].copy()) for i in indices]
        else:
            rows = self.rows[indices].copy()
        out = Dataset(rows, self.labels[indices], self.kinds,
                      n_classes=self.n_classes, normalized=self.normalized)
        out.means = None if self.means is None else self.means.copy()
        out.stds = None if self.stds is None else self.stds.copy()
        return out


# -- parsing and serialization --------------------------------------------


def parse_libsvm(stream: IO[str] | Iterable[str], n_features: int | None = None) -> Dataset:
    """Parse LibSVM text into a sparse Dataset.

    Indices in the file are 1-based and must be strictly increasing per
    line.  Labels are mapped to ``0..n_classes-1``: numerically when every
    label token parses as a number (ascending value order, so -1/+1 becomes
    0/1), otherwise by first appearance.
    """
    raw_labels: list[str] = []
    rows: list[SparseRow] = []
    width = 0
    for ln, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        raw_labels.append(parts[0])
        idx = []
        vals = []
        prev = 0
        for tok in parts[1:]:
            try:
                i_s, v_s = tok.split(":")
                i = int(i_s)
                v = float(v_s)
            except ValueError as exc:
                raise DataError(f"line {ln}: bad index:value token {tok!r}") from exc
            if i < 1:
                raise DataError(f"line {ln}: indices are 1-based, got {i}")
            if i <= prev:
                raise DataError(f"line {ln}: indices must be strictly increasing")
            prev = i
            idx.append(i - 1)
            vals.append(v)
        rows.append((np.array(idx, dtype=np.int64), np.array(vals)))
        if idx:
            width = max(width, idx[-1] + 1)
    if not rows:
        raise DataError("no instances in stream")
    if n_features is not None:
        if width > n_features:
            raise DataError(f"index {width} exceeds declared {n_features} features")
        width = n_features
    labels = _encode_labels(raw_labels)
    return Dataset(rows, labels, [FeatureKind.NUMERIC] * width)


def parse_csv(stream: IO[str] | Iterable[str], label_column: int | str = -1,
              kinds: Sequence[FeatureKind] | None = None) -> Dataset:
    """Parse headed CSV text into a dense Dataset.

    ``label_column`` selects the class column by header name or position
    (negative positions count from the right).  ``kinds`` fixes the kind of
    each remaining column in file order; when omitted, a column is numeric
    iff every cell parses as a float.  Nominal cells become integer codes
    the same way label tokens do: by value order when every token is
    numeric, by first appearance otherwise.
    """
    lines = [ln.rstrip("\n") for ln in stream]
    lines = [ln for ln in lines if ln.strip()]
    if len(lines) < 2:
        raise DataError("CSV needs a header row and at least one instance")
    header = [h.strip() for h in lines[0].split(",")]
    ncol = len(header)
    if isinstance(label_column, str):
        if label_column not in header:
            raise DataError(f"label column {label_column!r} not in header")
        lab_pos = header.index(label_column)
    else:
        lab_pos = label_column if label_column >= 0 else ncol + label_column
        if not 0 <= lab_pos < ncol:
            raise DataError(f"label column {label_column} out of range")
    cells = []
    for ln, line in enumerate(lines[1:], start=2):
        row = [c.strip() for c in line.split(",")]
        if len(row) != ncol:
            raise DataError(f"line {ln}: expected {ncol} cells, got {len(row)}")
        cells.append(row)
    feat_pos = [j for j in range(ncol) if j != lab_pos]
    n = len(feat_pos)
    if kinds is None:
        kinds_out = []
        for j in feat_pos:
            kind = FeatureKind.NUMERIC
            for row in cells:
                try:
                    float(row[j])
                except ValueError:
                    kind = FeatureKind.NOMINAL
                    break
            kinds_out.append(kind)
    else:
        kinds_out = [FeatureKind(k) for k in kinds]
        if len(kinds_out) != n:
            raise DataError(f"kinds has {len(kinds_out)} entries for {n} features")
    X = np.empty((len(cells), n))
    for col, j in enumerate(feat_pos):
        if kinds_out[col] is FeatureKind.NUMERIC:
            try:
                X[:, col] = [float(row[j]) for row in cells]
            except ValueError as exc:
                raise DataError(f"non-numeric cell in numeric column {header[j]!r}") from exc
        else:
            # Same policy as labels: numeric tokens keep value order so
            # integer-coded columns survive a round trip, text tokens are
            # coded by first appearance.
            X[:, col] = _encode_labels([row[j] for row in cells])
    labels = _encode_labels([row[lab_pos] for row in cells])
    return Dataset(X, labels, kinds_out)


def _encode_labels(tokens: list[str]) -> np.ndarray:
    """Map label tokens to contiguous ids, numerically when possible."""
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        codes: dict[str, int] = {}
        return np.array([codes.setdefault(t, len(codes)) for t in tokens],
                        dtype=np.int64)
    uniq = sorted(set(values))
    code = {v: c for c, v in enumerate(uniq)}
    return np.array([code[v] for v in values], dtype=np.int64)


def write_libsvm(dataset: Dataset, stream: IO[str]) -> None:
    """Serialize to LibSVM text (1-based indices, shortest round-trip floats)."""
    if dataset.is_sparse:
        pairs = dataset.rows
    else:
        pairs = []
        for i in range(dataset.n_instances):
            idx = np.flatnonzero(dataset.rows[i])
            pairs.append((idx, dataset.rows[i][idx]))
    for (idx, vals), y in zip(pairs, dataset.labels):
        toks = [str(int(y))]
        toks += [f"{int(i) + 1}:{float(v)!r}" for i, v in zip(idx, vals)]
        stream.write(" ".join(toks) + "\n")


def write_csv(dataset: Dataset, stream: IO[str], label_name: str = "class") -> None:
    """Serialize a dense Dataset to headed CSV, label column last."""
    if dataset.is_sparse:
        raise DataError("CSV serialization requires a dense dataset")
    header = [f"f{j}" for j in range(dataset.n_features)] + [label_name]
    stream.write(",".join(header) + "\n")
    nominal = ~dataset.numeric_mask()
    for i in range(dataset.n_instances):
        row = dataset.rows[i]
        cells = [str(int(v)) if nom else repr(float(v))
                 for v, nom in zip(row, nominal)]
        cells.append(str(int(dataset.labels[i])))
        stream.write(",".join(cells) + "\n")


def write_metadata(dataset: Dataset, stream: IO[str]) -> None:
    """Write the JSON metadata sidecar (feature count, kinds, statistics)."""
    doc = {
        "n_features": dataset.n_features,
        "n_classes": dataset.n_classes,
        "kinds": [k.value for k in dataset.kinds],
        "normalized": dataset.normalized,
        "means": None if dataset.means is None else dataset.means.tolist(),
        "stds": None if dataset.stds is None else dataset.stds.tolist(),
    }
    json.dump(doc, stream, indent=2)
    stream.write("\n")


def read_metadata(stream: IO[str]) -> dict:
    doc = json.load(stream)
    for key in ("n_features", "n_classes", "kinds"):
        if key not in doc:
            raise DataError(f"metadata sidecar missing {key!r}")
    return doc


# -- normalization ---------------------------------------------------------


def zscore_normalize(dataset: Dataset) -> Dataset:
    """Z-score numeric features with population statistics.

    Constant features get a recorded standard deviation of 1, which sends
    their values to exactly 0.  Dense values are materialized; sparse rows
    are left untouched and the transform is applied lazily through the
    recorded statistics (absent entries count as raw zeros).  Nominal
    features pass through unchanged.
    """
    m = dataset.n_instances
    if m == 0:
        raise DataError("cannot normalize an empty dataset")
    if dataset.is_sparse:
        s = np.zeros(dataset.n_features)
        sq = np.zeros(dataset.n_features)
        for idx, vals in dataset.rows:
            np.add.at(s, idx, vals)
            np.add.at(sq, idx, vals * vals)
        mean = s / m
        var = np.maximum(sq / m - mean * mean, 0.0)
        std = np.sqrt(var)
        std[std == 0.0] = 1.0
        # Stored rows stay raw, so z-scoring the effective values collapses
        # to the raw-value transform; prior statistics drop out.
        rows = [(idx.copy(), vals.copy()) for idx, vals in dataset.rows]
        out = Dataset(rows, dataset.labels.copy(), dataset.kinds,
                      n_classes=dataset.n_classes)
        out.means, out.stds, out.normalized = mean, std, True
        return out
    X = dataset.rows.copy()
    mask = dataset.numeric_mask()
    mean = np.zeros(dataset.n_features)
    std = np.ones(dataset.n_features)
    if mask.any():
        sub = X[:, mask]
        mu = sub.mean(axis=0)
        sigma = sub.std(axis=0)  # population
        sigma[sigma == 0.0] = 1.0
        X[:, mask] = (sub - mu) / sigma
        mean[mask] = mu
        std[mask] = sigma
    out = Dataset(X, dataset.labels.copy(), dataset.kinds,
                  n_classes=dataset.n_classes)
    out.means, out.stds, out.normalized = mean, std, True
    return out


# -- partitioning and sampling ---------------------------------------------


@dataclass
class PartitionedDataset:
    """A Dataset split into ``p`` contiguous balanced row blocks.

    Blocks are contiguous ranges of the original row order, so the
    (partition, local) lexicographic order of any two instances equals
    their global row order; distance ties therefore resolve identically
    for every partition count.
    """

    dataset: Dataset
    starts: np.ndarray  # shape (p + 1,), block g covers rows starts[g]:starts[g+1]

    @property
    def n_partitions(self) -> int:
        return self.starts.shape[0] - 1

    def block_indices(self, g: int) -> np.ndarray:
        return np.arange(self.starts[g], self.starts[g + 1], dtype=np.int64)

    def block_size(self, g: int) -> int:
        return int(self.starts[g + 1] - self.starts[g])

    def partition_of(self, global_index: int) -> int:
        g = int(np.searchsorted(self.starts, global_index, side="right") - 1)
        if not 0 <= g < self.n_partitions:
            raise DataError(f"global index {global_index} outside all blocks")
        return g

    def local_index_of(self, global_index: int) -> int:
        return int(global_index - self.starts[self.partition_of(global_index)])

    def global_index(self, g: int, local: int) -> int:
        return int(self.starts[g] + local)


def partition(dataset: Dataset, p: int, seed: int = 0) -> PartitionedDataset:
    """Split into ``p`` contiguous blocks whose sizes differ by at most one.

    The layout is deterministic; ``seed`` is accepted for interface
    stability but the assignment never depends on it (contiguity is what
    keeps neighbor tie-breaking invariant across partition counts).
    """
    m = dataset.n_instances
    if p < 1:
        raise DataError(f"partition count must be >= 1, got {p}")
    if p > m:
        raise DataError(f"cannot split {m} instances into {p} partitions")
    base, extra = divmod(m, p)
    sizes = np.full(p, base, dtype=np.int64)
    sizes[:extra] += 1
    starts = np.concatenate([[0], np.cumsum(sizes)])
    return PartitionedDataset(dataset, starts)


@dataclass
class SampleBatch:
    """A batch of sampled instances, each carried as a full copy.

    ``indices`` are global row ids in the source dataset; ``rows`` is a
    dense matrix or a list of sparse rows aligned with them.
    """

    batch_id: int
    indices: np.ndarray
    labels: np.ndarray
    rows: object

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    def row(self, pos: int):
        return self.rows[pos]


def draw_sample(pdata: PartitionedDataset, rate: float, batches: int = 1,
                seed: int = 0) -> list[SampleBatch]:
    """Draw ``ceil(rate * m)`` instances uniformly without replacement.

    The draw is stratification-free and independent of the partition
    layout; the same (rate, seed) always yields the same sample.  The
    sample is then cut into ``batches`` chunks whose sizes differ by at
    most one.
    """
    ds = pdata.dataset
    m = ds.n_instances
    if not 0.0 < rate <= 1.0:
        raise DataError(f"sample rate must be in (0, 1], got {rate}")
    if batches < 1:
        raise DataError(f"batch count must be >= 1, got {batches}")
    size = math.ceil(rate * m)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(m, size=size, replace=False).astype(np.int64)
    out = []
    for b, part in enumerate(np.array_split(chosen, batches)):
        if ds.is_sparse:
            rows = [(ds.rows[i][0].copy(), ds.rows[i][1].copy()) for i in part]
        else:
            rows = ds.rows[part].copy()
        out.append(SampleBatch(batch_id=b, indices=part,
                               labels=ds.labels[part].copy(), rows=rows))
    return out
