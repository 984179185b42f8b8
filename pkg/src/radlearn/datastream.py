"""Labeled datasets, symmetric label noise and the online batch stream.

A :class:`Dataset` keeps features and both label columns as parallel numpy
arrays. ``given`` is what learners see; ``true`` is hidden ground truth that
only the oracle and the metrics may read.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed input data or invalid dataset sizes."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Instance:
    id: int
    features: np.ndarray
    given_label: int
    true_label: int

    @property
    def is_clean(self) -> bool:
        return self.given_label == self.true_label


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    given: np.ndarray
    true: np.ndarray
    ids: np.ndarray
    k_classes: int
    label_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        n = X.shape[0]
        given = np.asarray(self.given, dtype=np.int64)
        true = np.asarray(self.true, dtype=np.int64)
        ids = np.asarray(self.ids, dtype=np.int64)
        for name, col in (("given", given), ("true", true), ("ids", ids)):
            if col.shape != (n,):
                raise DataError(f"{name} has shape {col.shape}, expected ({n},)")
        if self.k_classes < 1:
            raise DataError("k_classes must be positive")
        for name, col in (("given", given), ("true", true)):
            if n and (col.min() < 0 or col.max() >= self.k_classes):
                raise DataError(f"{name} labels outside 0..{self.k_classes - 1}")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "given", _frozen(given))
        object.__setattr__(self, "true", _frozen(true))
        object.__setattr__(self, "ids", _frozen(ids))

    def __len__(self) -> int:
        return self.features.shape[0]

    def __getitem__(self, j: int) -> Instance:
        return Instance(int(self.ids[j]), self.features[j], int(self.given[j]), int(self.true[j]))

    def __iter__(self) -> Iterator[Instance]:
        return (self[j] for j in range(len(self)))

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def noisy_mask(self) -> np.ndarray:
        return self.given != self.true

    @property
    def n_clean(self) -> int:
        return int(np.count_nonzero(self.given == self.true))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.given[idx], self.true[idx], self.ids[idx],
                       self.k_classes, self.label_names)

    def with_given(self, given) -> "Dataset":
        return Dataset(self.features, given, self.true, self.ids, self.k_classes, self.label_names)

    def restored(self) -> "Dataset":
        """Copy with every given label reset to the true label."""
        return self.with_given(self.true)

    @classmethod
    def empty(cls, n_features: int, k_classes: int) -> "Dataset":
        return cls(np.empty((0, n_features)), np.empty(0, np.int64), np.empty(0, np.int64),
                   np.empty(0, np.int64), k_classes)

    @classmethod
    def concat(cls, parts: Sequence["Dataset"]) -> "Dataset":
        parts = list(parts)
        if not parts:
            raise DataError("nothing to concatenate")
        head = parts[0]
        return cls(np.concatenate([p.features for p in parts]),
                   np.concatenate([p.given for p in parts]),
                   np.concatenate([p.true for p in parts]),
                   np.concatenate([p.ids for p in parts]),
                   head.k_classes, head.label_names)


@dataclass(frozen=True)
class BatchStream:
    d0: Dataset
    batches: tuple[Dataset, ...]
    test_set: Dataset
    k_classes: int
    noise_level: float

    @property
    def batch_size(self) -> int:
        return len(self.batches[0]) if self.batches else 0

    def __len__(self) -> int:
        return len(self.batches)

    def restored(self) -> "BatchStream":
        """Same membership and order with all batch labels restored to truth."""
        return BatchStream(self.d0, tuple(b.restored() for b in self.batches), self.test_set,
                           self.k_classes, 0.0)


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of a labeled CSV file.

    ``features=None`` means every column other than the label, true-label and
    id columns. ``classes`` pins the label vocabulary; values outside it are
    rejected instead of being appended to the mapping.
    """

    label: str
    features: tuple[str, ...] | None = None
    true_label: str | None = None
    id: str | None = None
    classes: tuple[str, ...] | None = None


def _label_mapping(raw: list[str], classes: Sequence[str] | None) -> dict[str, int]:
    if classes is not None:
        return {c: i for i, c in enumerate(classes)}
    # integer labels already forming 0..K-1 keep their values, so synthetic
    # CSVs round-trip; anything else is numbered in first-seen order
    try:
        as_int = sorted({int(v) for v in raw})
    except ValueError:
        as_int = None
    if as_int is not None and as_int == list(range(len(as_int))):
        return {str(v): v for v in as_int} | {v: int(v) for v in raw}
    mapping: dict[str, int] = {}
    for v in raw:
        mapping.setdefault(v, len(mapping))
    return mapping


def load_csv(path: str | Path, schema: CsvSchema | str) -> Dataset:
    """Read a labeled dataset from a CSV file with a header row.

    Row numbers in error messages count the header as row 1.
    """
    if isinstance(schema, str):
        schema = CsvSchema(label=schema)
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)

    def col(name: str) -> int:
        try:
            return header.index(name)
        except ValueError:
            raise DataError(f"{path}: column {name!r} not in header") from None

    label_col = col(schema.label)
    true_col = col(schema.true_label) if schema.true_label else None
    id_col = col(schema.id) if schema.id else None
    if schema.features is None:
        skip = {label_col, true_col, id_col}
        feat_cols = [j for j in range(len(header)) if j not in skip]
    else:
        feat_cols = [col(c) for c in schema.features]
    if not feat_cols:
        raise DataError(f"{path}: no feature columns")

    width = len(header)
    X = np.empty((len(rows), len(feat_cols)))
    raw_given, raw_true, ids = [], [], []
    for r, row in enumerate(rows):
        rowno = r + 2
        if len(row) != width:
            raise DataError(f"{path}: row {rowno} has {len(row)} fields, expected {width}")
        try:
            X[r] = [float(row[j]) for j in feat_cols]
        except ValueError:
            raise DataError(f"{path}: row {rowno} has a non-numeric feature") from None
        raw_given.append(row[label_col].strip())
        if true_col is not None:
            raw_true.append(row[true_col].strip())
        if id_col is not None:
            try:
                ids.append(int(row[id_col]))
            except ValueError:
                raise DataError(f"{path}: row {rowno} has a non-integer id") from None

    mapping = _label_mapping(raw_given + raw_true, schema.classes)

    def encode(values: list[str]) -> np.ndarray:
        out = np.empty(len(values), dtype=np.int64)
        for r, v in enumerate(values):
            if v not in mapping:
                raise DataError(f"{path}: row {r + 2} has unknown label {v!r}")
            out[r] = mapping[v]
        return out

    given = encode(raw_given)
    true = encode(raw_true) if true_col is not None else given
    k = len(schema.classes) if schema.classes is not None else len(set(mapping.values()))
    names = [""] * k
    for name, code in mapping.items():
        if not names[code]:
            names[code] = name
    return Dataset(X, given, true,
                   np.asarray(ids) if id_col is not None else np.arange(len(rows)),
                   k, tuple(names))


def save_csv(dataset: Dataset, path: str | Path) -> None:
    """Write ``id, f0..f{f-1}, label, true_label`` with lossless float text."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *(f"f{j}" for j in range(dataset.n_features)), "label", "true_label"])
        for j in range(len(dataset)):
            w.writerow([int(dataset.ids[j]), *(repr(float(x)) for x in dataset.features[j]),
                        int(dataset.given[j]), int(dataset.true[j])])


SYNTHETIC_SCHEMA = CsvSchema(label="label", true_label="true_label", id="id")


def _cluster_means(k: int, f: int) -> np.ndarray:
    # all pairwise distances equal sqrt(2) when the geometry allows it
    if f >= k:
        return np.eye(k, f)
    if f == k - 1:
        # drop the all-ones direction of the one-hot simplex
        basis = np.linalg.qr(np.eye(k) - 1.0 / k)[0][:, : k - 1]
        return np.eye(k) @ basis
    if f == 1:
        return np.sqrt(2.0) * np.arange(k, dtype=float)[:, None]
    # too few dimensions for a simplex: regular polygon with edge sqrt(2)
    angles = 2 * np.pi * np.arange(k) / k
    radius = np.sqrt(2.0) / (2 * np.sin(np.pi / k))
    means = np.zeros((k, f))
    means[:, 0] = radius * np.cos(angles)
    means[:, 1] = radius * np.sin(angles)
    return means


def make_synthetic(k_classes: int, f: int, n: int, cluster_spread: float, seed: int) -> Dataset:
    """Isotropic Gaussian clusters, one per class, with balanced class counts."""
    if k_classes < 2:
        raise DataError("k_classes must be at least 2")
    if f < 1:
        raise DataError("f must be at least 1")
    if n < k_classes:
        raise DataError("n must be at least k_classes")
    if not cluster_spread > 0:
        raise DataError("cluster_spread must be positive")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n) % k_classes)
    X = _cluster_means(k_classes, f)[labels] + cluster_spread * rng.standard_normal((n, f))
    return Dataset(X, labels, labels, np.arange(n), k_classes)


def inject_ncar_noise(dataset: Dataset, noise_level: float, seed) -> Dataset:
    """Corrupt each label independently with probability ``noise_level``.

    A corrupted label is drawn uniformly from the K-1 classes other than the
    true one. True labels are left untouched.
    """
    if not 0.0 <= noise_level <= 1.0:
        raise DataError(f"noise_level {noise_level} outside [0, 1]")
    k = dataset.k_classes
    if k < 2:
        raise DataError("label noise needs at least two classes")
    rng = np.random.default_rng(seed)
    n = len(dataset)
    flip = rng.random(n) < noise_level
    shift = rng.integers(1, k, size=n)
    given = np.where(flip, (dataset.true + shift) % k, dataset.true)
    return dataset.with_given(given)


def stream_batches(dataset: Dataset, d0_size: int, batch_size: int, test_size: int,
                   noise_level: float, seed: int, *, shuffle: bool = True,
                   noise_seed: int | None = None) -> BatchStream:
    """Split a dataset into a clean kick-start batch, noisy batches and a clean test set.

    Order after the optional seeded shuffle: ``d0`` first, then the test set,
    then the training pool cut into equal batches. A trailing partial batch is
    dropped.
    """
    n = len(dataset)
    if min(d0_size, batch_size, test_size) < 1:
        raise DataError("d0_size, batch_size and test_size must be positive")
    if d0_size + test_size + batch_size > n:
        raise DataError(f"d0 {d0_size} + test {test_size} + one batch {batch_size} exceeds {n} instances")
    order = np.random.default_rng(seed).permutation(n) if shuffle else np.arange(n)
    d0 = dataset.subset(order[:d0_size]).restored()
    test = dataset.subset(order[d0_size:d0_size + test_size]).restored()
    pool_idx = order[d0_size + test_size:]
    n_batches, tail = divmod(len(pool_idx), batch_size)
    if tail:
        logger.info("dropping trailing partial batch of %d instances", tail)
    pool = dataset.subset(pool_idx[: n_batches * batch_size]).restored()
    # separate entropy stream so the corruption pattern is not tied to the shuffle
    pool = inject_ncar_noise(pool, noise_level, [seed, 1] if noise_seed is None else noise_seed)
    batches = tuple(pool.subset(np.arange(b * batch_size, (b + 1) * batch_size))
                    for b in range(n_batches))
    return BatchStream(d0, batches, test, dataset.k_classes, float(noise_level))
