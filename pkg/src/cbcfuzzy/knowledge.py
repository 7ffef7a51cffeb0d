"""Expert hematology knowledge: reference intervals, disease rules, labelling.

The reference intervals per parameter are

    WBC  low 0-4    normal 4-10    high 10-60     (10^9/L)
    HGB  low 0-12   normal 12-16   high 16-50     (g/dL)
    HCT  low 0-35   normal 35-54   high 54-100    (%)
    PLT  low 0-100  normal 100-450 high 450-1500  (10^9/L)

Two independent encodings of the disease rules live here: the fuzzy rule
document shipped in ``data/rules.json`` and the crisp
``PATTERN_GROUPS`` table behind :func:`crisp_oracle`.  Tests hold them
against each other.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from itertools import product
from typing import Mapping, Optional

from .errors import ConfigurationError, InputError
from .inference import DEFAULT_RESOLUTION, InferenceResult, RuleBase, infer, loads_rules
from .membership import FuzzyVariable, boundary_terms, loads_variables

PARAMETERS = ("WBC", "HGB", "HCT", "PLT")

# name -> (universe, (lower boundary, upper boundary))
REFERENCE_INTERVALS = {
    "WBC": ((0.0, 60.0), (4.0, 10.0)),
    "HGB": ((0.0, 50.0), (12.0, 16.0)),
    "HCT": ((0.0, 100.0), (35.0, 54.0)),
    "PLT": ((0.0, 1500.0), (100.0, 450.0)),
}

DEFAULT_DELTAS = {"WBC": 0.5, "HGB": 0.5, "HCT": 2.0, "PLT": 25.0}

DEFAULT_TAU = 0.5

BINS = ("low", "normal", "high")


class DiseaseClass(enum.IntEnum):
    """Class taxonomy.  Indices 0-10 follow the published test confusion matrix."""

    IDA_SCA_ABL = 0
    HEALTHY = 1
    NO_DISEASE_DETECTED = 2
    SEP_UTI = 3
    CLCD_ABL = 4
    OVF_ITP = 5
    OVF = 6
    PANCYTOPENIA = 7
    CKD = 8
    SEPTICAEMIA = 9
    POLYCYTHEMIA = 10
    DENGUE = 11

    @property
    def label(self) -> str:
        """Long spelling used in labelled CSV files."""
        return _LABELS[self]

    @property
    def short(self) -> str:
        """Abbreviated spelling used in report tables."""
        return _SHORT[self]

    def __str__(self) -> str:
        return self.label

    @classmethod
    def parse(cls, text: str) -> "DiseaseClass":
        key = text.strip()
        try:
            return _LOOKUP[key.casefold()]
        except KeyError:
            raise InputError(f"unknown disease class {text!r}") from None


_LABELS = {
    DiseaseClass.IDA_SCA_ABL: "Iron Deficiency Anemia - IDA / Sickle Cell Anemia / Acute Blood Loss",
    DiseaseClass.HEALTHY: "Healthy",
    DiseaseClass.NO_DISEASE_DETECTED: "No Disease Detected",
    DiseaseClass.SEP_UTI: "Septicemia / Urine Tract Infections - UTI",
    DiseaseClass.CLCD_ABL: "Chronic Liver Cell Disease - CLCD / Acute Blood Loss",
    DiseaseClass.OVF_ITP: "Other Viral Fevers / Idiopathic Thrombocytopenic Purpura - ITP",
    DiseaseClass.OVF: "Other Viral Fevers",
    DiseaseClass.PANCYTOPENIA: "Pancytopenia",
    DiseaseClass.CKD: "Chronic Kidney Disease - CKD",
    DiseaseClass.SEPTICAEMIA: "Septicemia",
    DiseaseClass.POLYCYTHEMIA: "Polycythemia",
    DiseaseClass.DENGUE: "Dengue",
}

_SHORT = {
    DiseaseClass.IDA_SCA_ABL: "IDA or SCA or ABL",
    DiseaseClass.HEALTHY: "Healthy",
    DiseaseClass.NO_DISEASE_DETECTED: "No Disease",
    DiseaseClass.SEP_UTI: "Sep or UTI",
    DiseaseClass.CLCD_ABL: "CLCD or ABL",
    DiseaseClass.OVF_ITP: "OVF or ITP",
    DiseaseClass.OVF: "OVF",
    DiseaseClass.PANCYTOPENIA: "Pan",
    DiseaseClass.CKD: "CKD",
    DiseaseClass.SEPTICAEMIA: "Sep",
    DiseaseClass.POLYCYTHEMIA: "Pol",
    DiseaseClass.DENGUE: "Dengue",
}

_LOOKUP = {}
for _c in DiseaseClass:
    for _key in (_c.label, _c.short, _c.name):
        _LOOKUP[_key.casefold()] = _c
_LOOKUP["septicaemia"] = DiseaseClass.SEPTICAEMIA
_LOOKUP["no disease detection"] = DiseaseClass.NO_DISEASE_DETECTED


# One entry per disease paragraph of the rule list, in listing order.  Each
# entry holds its concrete (WBC, HGB, HCT, PLT) bin patterns; "WBC low or
# normal" expands to two patterns, and the two viral-fever conditions map to
# different classes (WBC low -> OVF/ITP, WBC normal -> OVF).
L, N, H = BINS
PATTERN_GROUPS = (
    ("Sep/UTI", ((DiseaseClass.SEP_UTI, (H, N, N, N)),)),
    ("Septicaemia", ((DiseaseClass.SEPTICAEMIA, (H, N, N, H)),)),
    ("Dengue", ((DiseaseClass.DENGUE, (L, H, H, L)), (DiseaseClass.DENGUE, (N, H, H, L)))),
    ("OVF", ((DiseaseClass.OVF_ITP, (L, N, N, L)), (DiseaseClass.OVF, (N, N, N, L)))),
    ("IDA/SCA/ABL", ((DiseaseClass.IDA_SCA_ABL, (N, L, L, N)),)),
    ("Polycythaemia", ((DiseaseClass.POLYCYTHEMIA, (N, H, H, N)),)),
    ("Pancytopenia", ((DiseaseClass.PANCYTOPENIA, (L, L, L, L)),)),
    ("CKD", ((DiseaseClass.CKD, (H, L, L, L)),)),
    ("CLCD/ABL", ((DiseaseClass.CLCD_ABL, (N, L, L, L)),)),
    ("Healthy", ((DiseaseClass.HEALTHY, (N, N, N, N)),)),
)
del L, N, H

_ORACLE = {pattern: cls for _, alts in PATTERN_GROUPS for cls, pattern in alts}


def measurements(record) -> dict:
    """Pull WBC/HGB/HCT/PLT out of a record object or mapping."""
    if isinstance(record, Mapping):
        values = {p: record.get(p, record.get(p.lower())) for p in PARAMETERS}
    else:
        values = {p: getattr(record, p.lower()) for p in PARAMETERS}
    out = {}
    for p, v in values.items():
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise InputError(f"{p} is missing or not numeric: {v!r}") from None
        if not math.isfinite(v):
            raise InputError(f"{p} is not finite: {v}")
        out[p] = v
    return out


def builtin_variables(family: str = "trapezoidal", deltas: Optional[Mapping[str, float]] = None) -> list:
    d = dict(DEFAULT_DELTAS)
    d.update(deltas or {})
    return [
        FuzzyVariable(name, universe, tuple(boundary_terms(universe, bounds, d[name], family)))
        for name, (universe, bounds) in REFERENCE_INTERVALS.items()
    ]


def builtin_rules_document() -> str:
    return resources.files(__package__).joinpath("data/rules.json").read_text("utf-8")


def builtin_rules(
    variables=None, family: str = "trapezoidal", deltas=None, resolution: int = DEFAULT_RESOLUTION
) -> RuleBase:
    if variables is None:
        return _default_rules(family, tuple(sorted((deltas or {}).items())), resolution)
    return loads_rules(builtin_rules_document(), {v.name: v for v in variables}, resolution)


def load_knowledge(
    variables_text: Optional[str] = None,
    rules_text: Optional[str] = None,
    family: str = "trapezoidal",
    deltas=None,
) -> RuleBase:
    """Rule base from edited JSON documents, falling back to the built-ins.

    Consequents must name ``DiseaseClass`` members so that labels stay
    comparable with the trained model.
    """
    if variables_text is None and rules_text is None:
        return builtin_rules(family=family, deltas=deltas)
    variables = builtin_variables(family, deltas) if variables_text is None else loads_variables(variables_text)
    rb = loads_rules(rules_text or builtin_rules_document(), {v.name: v for v in variables})
    for name in PARAMETERS:
        if name not in rb.variables:
            raise ConfigurationError(f"knowledge base lacks variable {name!r}")
    for cls in rb.output.classes:
        try:
            DiseaseClass.parse(cls)
        except InputError:
            raise ConfigurationError(f"rule consequent {cls!r} is not a known class") from None
    return rb


@lru_cache(maxsize=16)
def _default_rules(family, deltas, resolution) -> RuleBase:
    variables = builtin_variables(family, dict(deltas))
    return loads_rules(builtin_rules_document(), {v.name: v for v in variables}, resolution)


@dataclass(frozen=True)
class LabelResult:
    cls: DiseaseClass
    max_activation: float
    all_activations: dict
    inference: InferenceResult

    @property
    def centroid(self) -> Optional[float]:
        return self.inference.centroid


def label(record, tau: float = DEFAULT_TAU, rule_base: Optional[RuleBase] = None) -> LabelResult:
    """Fuzzy-label one CBC record.

    The strongest class wins (ties to the lowest output index) when its
    activation reaches ``tau``; otherwise, or when nothing fires at all, the
    verdict is No Disease Detected.
    """
    rb = rule_base if rule_base is not None else builtin_rules()
    result = infer(rb, measurements(record))
    activations = {DiseaseClass.parse(k): v for k, v in result.activations.items()}
    top = result.max_activation
    if top > 0.0 and top >= tau:
        cls = DiseaseClass.parse(result.argmax())
    else:
        cls = DiseaseClass.NO_DISEASE_DETECTED
    return LabelResult(cls, top, activations, result)


def crisp_bin(name: str, value: float) -> str:
    """Crisp interval of ``value``; a value on a boundary goes to the upper bin."""
    lo, hi = REFERENCE_INTERVALS[name][1]
    if value < lo:
        return "low"
    if value < hi:
        return "normal"
    return "high"


def crisp_pattern(record) -> tuple:
    m = measurements(record)
    return tuple(crisp_bin(p, m[p]) for p in PARAMETERS)


def crisp_oracle(record) -> Optional[DiseaseClass]:
    """Exact pattern match of the crisp bins against the rule table."""
    return _ORACLE.get(crisp_pattern(record))


def matching_bin_patterns() -> dict:
    """Every (low/normal/high)^4 bin pattern that the crisp table maps to a class."""
    out = {}
    for pattern in product(BINS, repeat=len(PARAMETERS)):
        cls = _ORACLE.get(pattern)
        if cls is not None:
            out[pattern] = cls
    return out


def in_core(record, deltas: Optional[Mapping[str, float]] = None) -> bool:
    """True when every parameter lies at least delta away from each interval boundary."""
    d = dict(DEFAULT_DELTAS)
    d.update(deltas or {})
    m = measurements(record)
    return all(abs(m[p] - b) >= d[p] for p in PARAMETERS for b in REFERENCE_INTERVALS[p][1])
