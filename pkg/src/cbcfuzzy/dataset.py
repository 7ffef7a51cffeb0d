"""CBC records: CSV I/O, cleaning, outliers, scaling, resampling, splitting, synthesis."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import FormatError, InputError, SizeError
from .knowledge import (
    DEFAULT_DELTAS,
    PARAMETERS,
    PATTERN_GROUPS,
    REFERENCE_INTERVALS,
    DiseaseClass,
)

COLUMNS = ("SampleID", "WBC", "HGB", "HCT", "PLT", "Age", "Sex", "RefGroup")
MANDATORY = ("SampleID", "WBC", "HGB", "HCT", "PLT", "Age")
LABEL_COLUMN = "Label"
FEATURES = ("WBC", "HGB", "HCT", "PLT", "Age")
SEXES = ("M", "F")
REF_GROUPS = ("adult-male", "adult-female", "child", "neonate")
MODES = ("core", "boundary", "mixed")
MIXED_CORE_SHARE = 0.8


@dataclass(frozen=True)
class CbcRecord:
    """One blood count.  Core fields are None when missing or unparseable."""

    sample_id: str
    wbc: Optional[float]
    hgb: Optional[float]
    hct: Optional[float]
    plt: Optional[float]
    age: Optional[float]
    sex: str = "unknown"
    ref_group: str = "unknown"
    label: Optional[DiseaseClass] = None

    @property
    def complete(self) -> bool:
        return all(v is not None for v in self.features)

    @property
    def features(self) -> tuple:
        return (self.wbc, self.hgb, self.hct, self.plt, self.age)


@dataclass(frozen=True)
class LabeledSample:
    features: tuple
    label: DiseaseClass


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (columns ``FEATURES``) with integer class labels.

    ``normalization`` holds one ``(min, max)`` pair per column once the matrix
    has been min-max scaled; ``ids`` tracks sample provenance through
    resampling and splitting.
    """

    X: np.ndarray
    y: np.ndarray
    ids: Optional[np.ndarray] = None
    normalization: Optional[tuple] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, len(FEATURES))
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise InputError(f"feature matrix {X.shape} does not match {y.shape[0]} labels")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.ids is not None:
            object.__setattr__(self, "ids", np.asarray(self.ids, dtype=object))

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def samples(self) -> list:
        return [LabeledSample(tuple(map(float, x)), DiseaseClass(int(c))) for x, c in zip(self.X, self.y)]

    def class_counts(self) -> dict:
        classes, counts = np.unique(self.y, return_counts=True)
        return {DiseaseClass(int(c)): int(n) for c, n in zip(classes, counts)}

    def take(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.intp)
        ids = None if self.ids is None else self.ids[index]
        return Dataset(self.X[index], self.y[index], ids, self.normalization)

    @classmethod
    def from_records(cls, records: Sequence[CbcRecord]) -> "Dataset":
        rows, labels, ids = [], [], []
        for r in records:
            if r.label is None:
                raise InputError(f"record {r.sample_id!r} has no label")
            if not r.complete:
                raise InputError(f"record {r.sample_id!r} is incomplete")
            rows.append(r.features)
            labels.append(int(r.label))
            ids.append(r.sample_id)
        X = np.array(rows, dtype=float).reshape(len(rows), len(FEATURES))
        return cls(X, np.array(labels, dtype=np.int64), np.array(ids, dtype=object))


# -- CSV ---------------------------------------------------------------------


def _parse_number(text: str) -> Optional[float]:
    try:
        v = float(text)
    except (TypeError, ValueError):
        return None
    return v if math.isfinite(v) and v >= 0 else None


def format_number(v: Optional[float]) -> str:
    if v is None:
        return ""
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def read_csv(stream) -> list:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("CSV has no header row") from None
    header = [h.strip().lstrip("\ufeff") for h in header]
    for col in MANDATORY:
        if col not in header:
            raise FormatError(f"missing mandatory column {col!r}")
    pos = {name: header.index(name) for name in header}
    records = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        line = reader.line_num
        if len(row) != len(header):
            raise FormatError(f"line {line}: expected {len(header)} fields, found {len(row)}")

        def cell(name, default=""):
            return row[pos[name]].strip() if name in pos else default

        hct = _parse_number(cell("HCT"))
        if hct is not None and hct > 100:
            hct = None
        label = None
        if cell(LABEL_COLUMN):
            try:
                label = DiseaseClass.parse(cell(LABEL_COLUMN))
            except InputError as exc:
                raise FormatError(f"line {line}: {exc}") from None
        records.append(
            CbcRecord(
                sample_id=cell("SampleID"),
                wbc=_parse_number(cell("WBC")),
                hgb=_parse_number(cell("HGB")),
                hct=hct,
                plt=_parse_number(cell("PLT")),
                age=_parse_number(cell("Age")),
                sex=cell("Sex") or "unknown",
                ref_group=cell("RefGroup") or "unknown",
                label=label,
            )
        )
    return records


def load_csv(path) -> list:
    """Read CBC records in file order; unknown columns are ignored."""
    with open(path, newline="", encoding="utf-8") as fh:
        return read_csv(fh)


def dumps_csv(records: Iterable[CbcRecord], labeled: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS + ((LABEL_COLUMN,) if labeled else ()))
    for r in records:
        row = [r.sample_id, *(format_number(v) for v in r.features), r.sex, r.ref_group]
        if labeled:
            row.append(r.label.label if r.label is not None else "")
        writer.writerow(row)
    return buf.getvalue()


def write_csv(records: Iterable[CbcRecord], path, labeled: bool = False) -> None:
    Path(path).write_text(dumps_csv(records, labeled), encoding="utf-8")


# -- cleaning and outliers ---------------------------------------------------


def clean(records: Iterable[CbcRecord]) -> list:
    """Drop incomplete records and exact duplicates, keeping first occurrences in order."""
    seen = set()
    out = []
    for r in records:
        if not r.complete or r in seen:
            continue
        seen.add(r)
        out.append(r)
    return out


def quantile(values: Sequence[float], p: float) -> float:
    """Quantile by linear interpolation between order statistics."""
    return float(np.quantile(np.asarray(values, dtype=float), p, method="linear"))


def iqr_bounds(values: Sequence[float], k: float = 1.5) -> tuple:
    q1, q3 = quantile(values, 0.25), quantile(values, 0.75)
    spread = q3 - q1
    return q1 - k * spread, q3 + k * spread


def iqr_filter(records: Sequence[CbcRecord], k: float = 1.5) -> list:
    """Drop every record with any core feature outside ``[Q1 - k*IQR, Q3 + k*IQR]``."""
    records = list(records)
    if len(records) < 4:
        raise SizeError(f"IQR filtering needs at least 4 records, got {len(records)}")
    X = np.array([r.features for r in records], dtype=float)
    keep = np.ones(len(records), dtype=bool)
    for j in range(X.shape[1]):
        lo, hi = iqr_bounds(X[:, j], k)
        keep &= (X[:, j] >= lo) & (X[:, j] <= hi)
    return [r for r, kept in zip(records, keep) if kept]


# -- scaling -------------------------------------------------------------------


def minmax_bounds(X: np.ndarray) -> tuple:
    return tuple((float(lo), float(hi)) for lo, hi in zip(X.min(axis=0), X.max(axis=0)))


def scale(X: np.ndarray, normalization: Sequence[tuple]) -> np.ndarray:
    """Apply stored min-max bounds; a zero-range column maps to 0."""
    X = np.asarray(X, dtype=float)
    lo = np.array([b[0] for b in normalization])
    hi = np.array([b[1] for b in normalization])
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (X - lo) / safe, 0.0)


def normalize_minmax(ds: Dataset) -> Dataset:
    if len(ds) == 0:
        raise SizeError("cannot normalize an empty dataset")
    bounds = minmax_bounds(ds.X)
    return Dataset(scale(ds.X, bounds), ds.y, ds.ids, bounds)


def apply_normalization(ds: Dataset, normalization: Sequence[tuple]) -> Dataset:
    """Scale held-out data with bounds fitted elsewhere (values may leave [0, 1])."""
    bounds = tuple((float(a), float(b)) for a, b in normalization)
    return Dataset(scale(ds.X, bounds), ds.y, ds.ids, bounds)


# -- resampling and splitting --------------------------------------------------


def oversample(ds: Dataset, seed) -> Dataset:
    """Random oversampling with replacement up to the majority-class count.

    Originals keep their positions; duplicates are appended class by class
    in ascending class order.
    """
    if len(ds) == 0:
        raise SizeError("cannot oversample an empty dataset")
    rng = np.random.default_rng(seed)
    classes, counts = np.unique(ds.y, return_counts=True)
    target = counts.max()
    extra = []
    for c, n in zip(classes, counts):
        if n < target:
            members = np.flatnonzero(ds.y == c)
            extra.append(rng.choice(members, size=target - n, replace=True))
    if not extra:
        return ds
    return ds.take(np.concatenate([np.arange(len(ds))] + extra))


def split_indices(y: np.ndarray, test_fraction: float, seed) -> tuple:
    """Stratified train/test index arrays (each sorted)."""
    if not 0 < test_fraction < 1:
        raise InputError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        n = members.size
        # singletons stay in training; otherwise keep at least one training row
        n_test = 0 if n == 1 else min(n - 1, math.floor(n * test_fraction + 0.5))
        shuffled = rng.permutation(members)
        test.append(shuffled[:n_test])
        train.append(shuffled[n_test:])
    train_idx = np.sort(np.concatenate(train)) if train else np.array([], dtype=np.intp)
    test_idx = np.sort(np.concatenate(test)) if test else np.array([], dtype=np.intp)
    return train_idx, test_idx


def split(ds: Dataset, test_fraction: float, seed) -> tuple:
    train_idx, test_idx = split_indices(ds.y, test_fraction, seed)
    return ds.take(train_idx), ds.take(test_idx)


# -- synthetic data ----------------------------------------------------------


def _interval(name: str, bin_label: str) -> tuple:
    (umin, umax), (b1, b2) = REFERENCE_INTERVALS[name]
    return {"low": (umin, b1), "normal": (b1, b2), "high": (b2, umax)}[bin_label]


def _bands(name: str, bin_label: str) -> list:
    b1, b2 = REFERENCE_INTERVALS[name][1]
    return {"low": [b1], "normal": [b1, b2], "high": [b2]}[bin_label]


def _draw(rng, name: str, bin_label: str, core: bool, delta: float) -> float:
    if core:
        lo, hi = _interval(name, bin_label)
        lo, hi = lo + delta, hi - delta
        v = round(float(rng.uniform(lo, hi)), 3)
        return min(max(v, lo), hi)
    bands = _bands(name, bin_label)
    b = bands[int(rng.integers(len(bands)))]
    return round(float(rng.uniform(b - delta, b + delta)), 3)


def generate_synthetic(n_per_class: int, mode: str = "core", seed=0, deltas=None) -> list:
    """Unlabelled records, ``n_per_class`` per disease rule paragraph.

    ``core`` draws each parameter from its target interval shrunk by delta,
    ``boundary`` from a transition band bordering that interval, and
    ``mixed`` makes 80% of each paragraph's records core and the rest
    boundary.  Where a paragraph has alternative patterns one is chosen
    uniformly per record.
    """
    if n_per_class < 1:
        raise SizeError(f"n_per_class must be >= 1, got {n_per_class}")
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")
    d = dict(DEFAULT_DELTAS)
    d.update(deltas or {})
    rng = np.random.default_rng(seed)
    n_core = {"core": n_per_class, "boundary": 0}.get(mode, round(MIXED_CORE_SHARE * n_per_class))
    records = []
    for _, alternatives in PATTERN_GROUPS:
        core_mask = rng.permutation(np.arange(n_per_class) < n_core)
        for is_core in core_mask:
            _, pattern = alternatives[int(rng.integers(len(alternatives)))]
            values = [_draw(rng, p, b, bool(is_core), d[p]) for p, b in zip(PARAMETERS, pattern)]
            records.append(
                CbcRecord(
                    sample_id=f"SYN-{len(records) + 1:06d}",
                    wbc=values[0],
                    hgb=values[1],
                    hct=values[2],
                    plt=values[3],
                    age=float(rng.integers(1, 91)),
                    sex=SEXES[int(rng.integers(len(SEXES)))],
                    ref_group=REF_GROUPS[int(rng.integers(len(REF_GROUPS)))],
                )
            )
    return records


def with_label(record: CbcRecord, cls: Optional[DiseaseClass]) -> CbcRecord:
    return replace(record, label=cls)
