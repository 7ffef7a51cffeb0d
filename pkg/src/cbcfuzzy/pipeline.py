"""End-to-end orchestration: label, preprocess, train, evaluate, predict.

Training order is clean -> IQR filter -> stratified split -> min-max fit on
the training partition -> oversample the training partition -> fit.  Test rows
never reach the scaler fit or the oversampler.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import (
    FEATURES,
    CbcRecord,
    Dataset,
    clean,
    iqr_filter,
    normalize_minmax,
    oversample,
    scale,
    split_indices,
    with_label,
)
from .errors import FormatError, InputError, TrainingError
from .forest import Forest, ForestConfig, fit
from .knowledge import DEFAULT_TAU, DiseaseClass, builtin_rules, label
from .metrics import EvaluationReport, confusion, report

MODEL_FORMAT = "cbcfuzzy-model"
MODEL_VERSION = 1


def derive_seed(root: int, name: str) -> int:
    """Independent 32-bit seed for a named pipeline stage."""
    seq = np.random.SeedSequence([int(root), zlib.crc32(name.encode("utf-8"))])
    return int(seq.generate_state(1)[0])


@dataclass
class PipelineConfig:
    tau: float = DEFAULT_TAU
    family: str = "trapezoidal"
    deltas: dict = field(default_factory=dict)
    test_fraction: float = 0.3
    iqr_k: Optional[float] = 1.5
    n_estimators: int = 100
    max_depth: Optional[int] = 6
    features_per_split: Optional[int] = None
    min_samples_split: int = 2
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise InputError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if not 0 <= self.tau <= 1:
            raise InputError(f"tau must lie in [0, 1], got {self.tau}")

    def forest_config(self) -> ForestConfig:
        return ForestConfig(
            n_estimators=self.n_estimators,
            max_depth=self.max_depth,
            features_per_split=self.features_per_split,
            min_samples_split=self.min_samples_split,
            seed=derive_seed(self.seed, "forest"),
        )


def label_records(records: Sequence[CbcRecord], tau: float = DEFAULT_TAU, rule_base=None) -> list:
    """Attach fuzzy labels; incomplete records get no label."""
    rb = rule_base if rule_base is not None else builtin_rules()
    out = []
    for r in records:
        if r.wbc is None or r.hgb is None or r.hct is None or r.plt is None:
            out.append(with_label(r, None))
        else:
            out.append(with_label(r, label(r, tau, rb).cls))
    return out


@dataclass
class Model:
    forest: Forest
    normalization: tuple
    features: tuple = FEATURES

    def _matrix(self, records: Sequence[CbcRecord]) -> np.ndarray:
        X = np.array([r.features for r in records], dtype=float).reshape(len(records), len(self.features))
        return scale(X, self.normalization)

    def predict(self, records: Sequence[CbcRecord]) -> list:
        if not records:
            return []
        return [DiseaseClass(int(c)) for c in self.forest.predict(self._matrix(records))]

    def predict_proba(self, records: Sequence[CbcRecord]) -> list:
        """One ``{DiseaseClass: fraction}`` mapping per record."""
        proba = self.forest.predict_proba(self._matrix(records))
        classes = [DiseaseClass(int(c)) for c in self.forest.class_order]
        return [dict(zip(classes, map(float, row))) for row in proba]

    def dumps(self) -> str:
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "features": list(self.features),
            "normalization": [list(b) for b in self.normalization],
            "forest": self.forest.to_dict(),
        }
        return json.dumps(doc, separators=(",", ":")) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Model":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"model file is not JSON: {exc}") from None
        if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
            raise FormatError("not a cbcfuzzy model file")
        if doc.get("version") != MODEL_VERSION:
            raise FormatError(f"unsupported model version {doc.get('version')!r}")
        try:
            norm = tuple((float(a), float(b)) for a, b in doc["normalization"])
            return cls(Forest.from_dict(doc["forest"]), norm, tuple(doc["features"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed model file: {exc}") from None

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "Model":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


@dataclass
class TrainResult:
    model: Model
    train_records: list
    test_records: list
    balanced: Dataset = field(repr=False)
    report: EvaluationReport = field(repr=False)


def evaluate(model: Model, records: Sequence[CbcRecord]) -> EvaluationReport:
    """Report on complete, labelled records; classes appear in canonical order."""
    rows = [r for r in clean(records) if r.label is not None]
    if not rows:
        raise InputError("no complete labelled records to evaluate")
    predicted = model.predict(rows)
    truth = [r.label for r in rows]
    known = {DiseaseClass(int(c)) for c in model.forest.class_order}
    classes = sorted(set(truth) | set(predicted) | known)
    cm = confusion(truth, predicted, labels=classes)
    return report(type(cm)([c.short for c in classes], cm.matrix))


def train(records: Sequence[CbcRecord], config: PipelineConfig = PipelineConfig()) -> TrainResult:
    rows = [r for r in clean(records) if r.label is not None]
    if config.iqr_k is not None:
        rows = iqr_filter(rows, config.iqr_k)
    ds = Dataset.from_records(rows)
    if len(ds.class_counts()) < 2:
        raise TrainingError(f"need at least two classes to train, found {list(ds.class_counts())}")
    train_idx, test_idx = split_indices(ds.y, config.test_fraction, derive_seed(config.seed, "split"))
    train_ds = normalize_minmax(ds.take(train_idx))
    balanced = oversample(train_ds, derive_seed(config.seed, "oversample"))
    forest = fit(balanced.X, balanced.y, config.forest_config())
    model = Model(forest, train_ds.normalization)
    train_records = [rows[i] for i in train_idx]
    test_records = [rows[i] for i in test_idx]
    return TrainResult(model, train_records, test_records, balanced, evaluate(model, train_records))


def predict_one(
    measurements: dict, model: Optional[Model] = None, tau: float = DEFAULT_TAU, rule_base=None
) -> dict:
    """Fuzzy verdict for one sample plus, when a model is given, its forest vote."""
    rb = rule_base if rule_base is not None else builtin_rules()
    record = CbcRecord(
        "query",
        measurements["WBC"],
        measurements["HGB"],
        measurements["HCT"],
        measurements["PLT"],
        measurements.get("Age"),
    )
    res = label(record, tau, rb)
    out = {
        "fuzzy_label": res.cls.label,
        "max_activation": res.max_activation,
        "centroid": res.centroid,
        "activations": {c.label: v for c, v in res.all_activations.items()},
    }
    if model is not None:
        if record.age is None:
            raise InputError("the trained model needs Age")
        out["model_label"] = model.predict([record])[0].label
        out["probabilities"] = {c.label: p for c, p in model.predict_proba([record])[0].items()}
    return out
