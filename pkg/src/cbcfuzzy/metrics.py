"""Confusion matrices and precision / recall / F1 reports."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .errors import FormatError, InputError

FORMATS = ("text", "json", "csv")


class ConfusionMatrix:
    """Rows are true classes, columns predicted classes, both in ``labels`` order."""

    def __init__(self, labels: Sequence, matrix):
        self.labels = tuple(labels)
        m = np.asarray(matrix)
        if m.shape != (len(self.labels), len(self.labels)):
            raise InputError(f"matrix shape {m.shape} does not fit {len(self.labels)} labels")
        if (m < 0).any() or not np.array_equal(m, np.round(m)):
            raise InputError("confusion counts must be non-negative integers")
        self.matrix = m.astype(np.int64)

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"ConfusionMatrix(labels={self.labels!r}, total={self.total})"

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    def reorder(self, labels: Sequence) -> "ConfusionMatrix":
        idx = [self.labels.index(lab) for lab in labels]
        return ConfusionMatrix(labels, self.matrix[np.ix_(idx, idx)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["True \\ Predicted", *map(str, self.labels)])
        for lab, row in zip(self.labels, self.matrix):
            w.writerow([str(lab), *map(int, row)])
        return buf.getvalue()

    @classmethod
    def from_csv_text(cls, text: str) -> "ConfusionMatrix":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows:
            raise FormatError("empty confusion-matrix CSV")
        labels = [c.strip() for c in rows[0][1:]]
        body = rows[1:]
        if [r[0].strip() for r in body] != labels:
            raise FormatError("row labels must repeat the column labels in the same order")
        try:
            matrix = [[int(c) for c in r[1:]] for r in body]
        except ValueError as exc:
            raise FormatError(f"non-integer confusion count: {exc}") from None
        return cls(labels, matrix)

    @classmethod
    def from_csv(cls, path) -> "ConfusionMatrix":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv_text(fh.read())


def reference_matrix() -> ConfusionMatrix:
    """Published 11-class test-set confusion matrix (940 samples)."""
    text = resources.files(__package__).joinpath("data/reference_confusion.csv").read_text("utf-8")
    return ConfusionMatrix.from_csv_text(text)


def confusion(true_labels: Sequence, predicted_labels: Sequence, labels: Optional[Sequence] = None) -> ConfusionMatrix:
    if len(true_labels) != len(predicted_labels):
        raise InputError(f"{len(true_labels)} true labels vs {len(predicted_labels)} predictions")
    if len(true_labels) == 0:
        raise InputError("no labels to compare")
    if labels is None:
        labels = sorted(set(true_labels) | set(predicted_labels))
    index = {lab: i for i, lab in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        try:
            m[index[t], index[p]] += 1
        except KeyError as exc:
            raise InputError(f"label {exc.args[0]!r} not in class list") from None
    return ConfusionMatrix(labels, m)


@dataclass(frozen=True)
class ClassMetrics:
    label: object
    precision: float
    recall: float
    f1: float
    support: int
    undefined: tuple = ()  # names of metrics whose denominator was zero


@dataclass(frozen=True)
class EvaluationReport:
    matrix: ConfusionMatrix
    per_class: tuple
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float

    @property
    def total(self) -> int:
        return self.matrix.total

    def __getitem__(self, label) -> ClassMetrics:
        for c in self.per_class:
            if c.label == label:
                return c
        raise KeyError(label)


def _ratio(num: float, den: float) -> tuple:
    return (num / den, True) if den > 0 else (0.0, False)


def report(cm: ConfusionMatrix) -> EvaluationReport:
    """Per-class and support-weighted metrics; a zero denominator gives 0 and is flagged."""
    m = cm.matrix.astype(float)
    total = m.sum()
    if total < 1:
        raise InputError("confusion matrix is empty")
    diag = np.diag(m)
    col, row = m.sum(axis=0), m.sum(axis=1)
    rows = []
    for k, lab in enumerate(cm.labels):
        p, p_ok = _ratio(diag[k], col[k])
        r, r_ok = _ratio(diag[k], row[k])
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        undefined = tuple(name for name, ok in (("precision", p_ok), ("recall", r_ok)) if not ok)
        rows.append(ClassMetrics(lab, float(p), float(r), float(f), int(row[k]), undefined))
    w = row / total
    return EvaluationReport(
        cm,
        tuple(rows),
        float(diag.sum() / total),
        float(sum(wi * c.precision for wi, c in zip(w, rows))),
        float(sum(wi * c.recall for wi, c in zip(w, rows))),
        float(sum(wi * c.f1 for wi, c in zip(w, rows))),
    )


def _cell(value: float, undefined: bool) -> str:
    return f"{value:.4f}" + ("*" if undefined else "")


def _render_text(rep: EvaluationReport) -> str:
    names = [str(c.label) for c in rep.per_class]
    width = max([len("Categories"), len("weighted avg")] + [len(n) for n in names])
    head = f"{'Categories':<{width}}  {'Precision':>10}  {'Recall':>10}  {'F1-score':>10}  {'Support':>8}"
    lines = [head, "-" * len(head)]
    for c in rep.per_class:
        lines.append(
            f"{str(c.label):<{width}}  {_cell(c.precision, 'precision' in c.undefined):>10}"
            f"  {_cell(c.recall, 'recall' in c.undefined):>10}  {_cell(c.f1, False):>10}  {c.support:>8}"
        )
    lines.append("-" * len(head))
    lines.append(f"{'accuracy':<{width}}  {'':>10}  {'':>10}  {rep.accuracy:>10.4f}  {rep.total:>8}")
    lines.append(
        f"{'weighted avg':<{width}}  {rep.weighted_precision:>10.4f}  {rep.weighted_recall:>10.4f}"
        f"  {rep.weighted_f1:>10.4f}  {rep.total:>8}"
    )
    lines.append(f"overall accuracy: {rep.accuracy:.0%}")
    if any(c.undefined for c in rep.per_class):
        lines.append("* undefined (zero denominator), reported as 0")
    return "\n".join(lines) + "\n"


def _render_json(rep: EvaluationReport) -> str:
    doc = {
        "labels": [str(lab) for lab in rep.matrix.labels],
        "matrix": rep.matrix.matrix.tolist(),
        "total": rep.total,
        "accuracy": round(rep.accuracy, 4),
        "weighted_avg": {
            "precision": round(rep.weighted_precision, 4),
            "recall": round(rep.weighted_recall, 4),
            "f1": round(rep.weighted_f1, 4),
        },
        "per_class": [
            {
                "label": str(c.label),
                "precision": round(c.precision, 4),
                "recall": round(c.recall, 4),
                "f1": round(c.f1, 4),
                "support": c.support,
                "undefined": list(c.undefined),
            }
            for c in rep.per_class
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def _render_csv(rep: EvaluationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "precision", "recall", "f1", "support", "undefined"])
    for c in rep.per_class:
        w.writerow([str(c.label), f"{c.precision:.4f}", f"{c.recall:.4f}", f"{c.f1:.4f}", c.support, ";".join(c.undefined)])
    w.writerow(["accuracy", "", "", f"{rep.accuracy:.4f}", rep.total, ""])
    w.writerow(
        ["weighted avg", f"{rep.weighted_precision:.4f}", f"{rep.weighted_recall:.4f}", f"{rep.weighted_f1:.4f}", rep.total, ""]
    )
    return buf.getvalue()


def render(rep: EvaluationReport, fmt: str = "text") -> str:
    if fmt == "text":
        return _render_text(rep)
    if fmt == "json":
        return _render_json(rep)
    if fmt == "csv":
        return _render_csv(rep)
    raise InputError(f"unknown report format {fmt!r}; choose from {FORMATS}")


def report_from_json(text: str) -> EvaluationReport:
    """Rebuild a report from its JSON rendering (exact, via the embedded matrix)."""
    try:
        doc = json.loads(text)
        return report(ConfusionMatrix(doc["labels"], doc["matrix"]))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"not a report document: {exc}") from None
