"""Random forest of CART trees grown on the Gini criterion."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import FormatError, InputError, SizeError

MODEL_FORMAT = "cbcfuzzy-forest"
MODEL_VERSION = 1

# gains and impurities closer than this count as ties
_EPS = 1e-12


def gini(counts: Sequence[int]) -> float:
    """Gini impurity ``1 - sum(p_k^2)`` of a class-count vector."""
    c = np.asarray(counts, dtype=float)
    total = c.sum()
    if total <= 0:
        raise InputError("gini impurity is undefined for an empty node")
    return float(1.0 - np.sum((c / total) ** 2))


class Split(NamedTuple):
    feature: int
    threshold: float
    gain: float


def _best_threshold(x: np.ndarray, y: np.ndarray, n_classes: int) -> Optional[tuple]:
    """Lowest weighted child impurity over midpoints of one feature."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    onehot = np.zeros((xs.size, n_classes))
    onehot[np.arange(xs.size), y[order]] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    right = left[-1] + onehot[-1] - left
    n_left = np.arange(1, xs.size, dtype=float)
    n_right = xs.size - n_left
    # n * weighted child gini = n - sum(l^2)/n_l - sum(r^2)/n_r
    weighted = (xs.size - (left**2).sum(axis=1) / n_left - (right**2).sum(axis=1) / n_right) / xs.size
    weighted = np.where(valid, weighted, np.inf)
    best = weighted.min()
    i = int(np.flatnonzero(weighted <= best + _EPS)[0])
    threshold = 0.5 * (xs[i] + xs[i + 1])
    if threshold >= xs[i + 1]:
        threshold = float(xs[i])
    return float(best), float(threshold)


def best_split(
    X: np.ndarray, y: np.ndarray, features: Optional[Sequence[int]] = None, n_classes: Optional[int] = None
) -> Optional[Split]:
    """Best axis-aligned split of ``(X, y)``; ``y`` holds class codes ``0..K-1``.

    Candidates are midpoints between consecutive distinct values of each
    feature in ``features``.  Ties go to the lowest feature index, then the
    lowest threshold.  Returns None when no candidate lowers the impurity.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise InputError("X must be 2-D with one row per label")
    if y.size < 2:
        return None
    k = int(n_classes if n_classes is not None else y.max() + 1)
    parent = gini(np.bincount(y, minlength=k))
    if parent <= _EPS:
        return None
    feats = range(X.shape[1]) if features is None else sorted(features)
    best = None
    for f in feats:
        found = _best_threshold(X[:, f], y, k)
        if found is None:
            continue
        impurity, threshold = found
        if best is None or impurity < best[0] - _EPS:
            best = (impurity, f, threshold)
    if best is None or parent - best[0] <= _EPS:
        return None
    return Split(best[1], best[2], parent - best[0])


@dataclass
class TreeNode:
    """Internal when ``feature`` is set; ``counts`` are the training class counts reaching the node."""

    counts: np.ndarray
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend((node.right, node.left))

    def to_dict(self) -> dict:
        out = {"counts": [int(c) for c in self.counts]}
        if not self.is_leaf:
            out.update(
                feature=int(self.feature),
                threshold=float(self.threshold),
                left=self.left.to_dict(),
                right=self.right.to_dict(),
            )
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeNode":
        counts = np.asarray(doc["counts"], dtype=np.int64)
        if "feature" not in doc:
            return cls(counts)
        return cls(
            counts,
            int(doc["feature"]),
            float(doc["threshold"]),
            cls.from_dict(doc["left"]),
            cls.from_dict(doc["right"]),
        )


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 100
    max_depth: Optional[int] = 6
    criterion: str = "gini"
    features_per_split: Optional[int] = None  # None -> ceil(sqrt(d))
    min_samples_split: int = 2
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise InputError("n_estimators must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise InputError("max_depth must be >= 1")
        if self.criterion != "gini":
            raise InputError(f"unsupported criterion {self.criterion!r}")
        if self.min_samples_split < 2:
            raise InputError("min_samples_split must be >= 2")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise InputError("features_per_split must be >= 1")

    def n_split_features(self, d: int) -> int:
        if self.features_per_split is None:
            return math.ceil(math.sqrt(d))
        return min(self.features_per_split, d)


def _grow(X, y, n_classes, depth, config, m, rng) -> TreeNode:
    counts = np.bincount(y, minlength=n_classes)
    node = TreeNode(counts)
    if config.max_depth is not None and depth >= config.max_depth:
        return node
    if y.size < config.min_samples_split or np.count_nonzero(counts) < 2:
        return node
    features = np.sort(rng.choice(X.shape[1], size=m, replace=False))
    split = best_split(X, y, features, n_classes)
    if split is None:
        return node
    mask = X[:, split.feature] <= split.threshold
    node.feature = split.feature
    node.threshold = split.threshold
    node.left = _grow(X[mask], y[mask], n_classes, depth + 1, config, m, rng)
    node.right = _grow(X[~mask], y[~mask], n_classes, depth + 1, config, m, rng)
    return node


def _tree_votes(node: TreeNode, X: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[rows] = int(np.argmax(node.counts))
        return
    go_left = X[rows, node.feature] <= node.threshold
    if go_left.any():
        _tree_votes(node.left, X, rows[go_left], out)
    if not go_left.all():
        _tree_votes(node.right, X, rows[~go_left], out)


@dataclass
class Forest:
    trees: list
    config: ForestConfig
    class_order: list
    n_features: int
    # per-tree row indices drawn at fit time; not persisted
    bootstrap_rows: list = field(default_factory=list, repr=False, compare=False)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InputError(f"expected {self.n_features} features, got shape {X.shape}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Fraction of trees voting for each class in ``class_order``."""
        X = self._check(X)
        k = len(self.class_order)
        votes = np.zeros((X.shape[0], k))
        code = np.empty(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            _tree_votes(tree, X, rows, code)
            votes[rows, code] += 1.0
        return votes / len(self.trees)

    def predict(self, X) -> list:
        """Plurality vote; ties go to the class listed first in ``class_order``."""
        proba = self.predict_proba(X)
        return [self.class_order[i] for i in np.argmax(proba, axis=1)]

    def feature_importance(self) -> np.ndarray:
        return feature_importance(self)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": asdict(self.config),
            "class_order": [int(c) for c in self.class_order],
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Forest":
        if doc.get("format") != MODEL_FORMAT:
            raise FormatError(f"not a forest document (format={doc.get('format')!r})")
        if doc.get("version") != MODEL_VERSION:
            raise FormatError(f"unsupported forest version {doc.get('version')!r}")
        try:
            return cls(
                [TreeNode.from_dict(t) for t in doc["trees"]],
                ForestConfig(**doc["config"]),
                list(doc["class_order"]),
                int(doc["n_features"]),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed forest document: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "Forest":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise FormatError(f"model file is not JSON: {exc}") from None


def fit(X, y, config: ForestConfig = ForestConfig()) -> Forest:
    """Bagged CART trees; every random draw derives from ``config.seed``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise SizeError("training set is empty")
    if X.shape[0] != y.shape[0]:
        raise InputError("X and y lengths differ")
    if not np.isfinite(X).all():
        raise InputError("training features must be finite")
    class_order = sorted(int(c) for c in np.unique(y))
    codes = np.searchsorted(np.array(class_order), y).astype(np.intp)
    n, d = X.shape
    m = config.n_split_features(d)
    trees, rows_used = [], []
    for child in np.random.SeedSequence(config.seed).spawn(config.n_estimators):
        rng = np.random.default_rng(child)
        rows = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        trees.append(_grow(X[rows], codes[rows], len(class_order), 0, config, m, rng))
        rows_used.append(rows)
    return Forest(trees, config, class_order, d, rows_used)


def feature_importance(forest: Forest) -> np.ndarray:
    """Mean impurity decrease per feature, normalised per tree then across trees.

    All zeros when no tree ever split.
    """
    total = np.zeros(forest.n_features)
    for tree in forest.trees:
        imp = np.zeros(forest.n_features)
        for node in tree.iter_nodes():
            if node.is_leaf:
                continue
            n = node.counts.sum()
            nl, nr = node.left.counts.sum(), node.right.counts.sum()
            decrease = n * gini(node.counts) - nl * gini(node.left.counts) - nr * gini(node.right.counts)
            imp[node.feature] += max(decrease, 0.0)
        if imp.sum() > 0:
            total += imp / imp.sum()
    s = total.sum()
    return total / s if s > 0 else total
