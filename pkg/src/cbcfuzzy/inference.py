"""Mamdani rule evaluation and centroid defuzzification.

Operators are the classical Mamdani set: AND = min, OR = max, implication
clips each output term at its rule strength, and aggregation takes the
pointwise max.  The output axis is ``[0, K]`` with one unit-width triangle per
class, so a lone firing class always defuzzifies to ``index + 0.5``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, InputError, NoFireError
from .membership import FuzzyVariable, fuzzify

DEFAULT_RESOLUTION = 5000


@dataclass(frozen=True)
class FuzzyRule:
    """IF (g1 OR ...) AND (g2 OR ...) ... THEN consequent.

    ``antecedent`` is a tuple of groups, each a tuple of ``(variable, term)``
    alternatives.
    """

    antecedent: tuple
    consequent: str

    def __post_init__(self):
        groups = tuple(tuple((str(v), str(t)) for v, t in g) for g in self.antecedent)
        if not groups or any(not g for g in groups):
            raise ConfigurationError(f"rule for {self.consequent!r} has an empty antecedent group")
        object.__setattr__(self, "antecedent", groups)

    @property
    def variables(self) -> set:
        return {v for g in self.antecedent for v, _ in g}


def fire_rule(rule: FuzzyRule, fuzzified: Mapping[str, Mapping[str, float]]) -> float:
    """Firing strength: min over groups of the max degree within each group."""
    try:
        return min(max(fuzzified[v][t] for v, t in group) for group in rule.antecedent)
    except KeyError as exc:
        raise InputError(f"fuzzified input lacks {exc.args[0]!r}") from None


@dataclass(frozen=True)
class OutputVariable:
    """Class axis ``[0, K]``; term ``k`` is the triangle ``(k, k + 0.5, k + 1)``."""

    classes: tuple
    resolution: int = DEFAULT_RESOLUTION
    grid: np.ndarray = field(init=False, repr=False, compare=False)
    _term_curve: np.ndarray = field(init=False, repr=False, compare=False)
    _owner: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise ConfigurationError("output variable needs at least one class")
        if len(set(self.classes)) != len(self.classes):
            raise ConfigurationError(f"duplicate output classes {self.classes}")
        if self.resolution < 2:
            raise ConfigurationError("resolution must be at least 2 samples per unit")
        k = len(self.classes)
        grid = np.linspace(0.0, float(k), k * self.resolution + 1)
        owner = np.minimum(np.floor(grid).astype(np.intp), k - 1)
        # every term vanishes at integer points, so the owner at shared edges is moot
        frac = grid - owner
        term_curve = np.clip(1.0 - np.abs(2.0 * frac - 1.0), 0.0, 1.0)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "_term_curve", term_curve)
        object.__setattr__(self, "_owner", owner)

    @property
    def size(self) -> int:
        return len(self.classes)

    def index(self, cls) -> int:
        return self.classes.index(cls)

    def center(self, cls) -> float:
        return self.index(cls) + 0.5

    def aggregate(self, strengths: Sequence[float]) -> np.ndarray:
        """Pointwise max of each class term clipped at its strength."""
        s = np.asarray(strengths, dtype=float)
        return np.minimum(self._term_curve, s[self._owner])


@dataclass(frozen=True)
class RuleBase:
    variables: Mapping[str, FuzzyVariable]
    rules: tuple
    output: OutputVariable

    def __post_init__(self):
        object.__setattr__(self, "variables", dict(self.variables))
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules:
            raise ConfigurationError("rule base has no rules")
        for r in self.rules:
            for v, t in (c for g in r.antecedent for c in g):
                if v not in self.variables:
                    raise ConfigurationError(f"rule {r.consequent!r} references unknown variable {v!r}")
                if t not in self.variables[v].labels:
                    raise ConfigurationError(f"rule {r.consequent!r} references unknown term {v}.{t}")
            if r.consequent not in self.output.classes:
                raise ConfigurationError(f"consequent {r.consequent!r} missing from output variable")

    @property
    def input_names(self) -> list:
        seen = []
        for r in self.rules:
            for g in r.antecedent:
                for v, _ in g:
                    if v not in seen:
                        seen.append(v)
        return seen


@dataclass(frozen=True)
class InferenceResult:
    """Per-class activations; the aggregate curve and centroid are computed on first access."""

    activations: dict
    output: OutputVariable = field(repr=False)
    fuzzified: dict = field(repr=False)

    @property
    def fired(self) -> bool:
        return self.max_activation > 0.0

    @property
    def max_activation(self) -> float:
        return max(self.activations.values())

    def argmax(self):
        """Strongest class; ties go to the lowest output index."""
        return max(self.activations, key=self.activations.__getitem__)

    @property
    def grid(self) -> np.ndarray:
        return self.output.grid

    @cached_property
    def aggregate(self) -> np.ndarray:
        return self.output.aggregate(list(self.activations.values()))

    @cached_property
    def centroid(self) -> Optional[float]:
        """None when no rule fired."""
        if not self.fired:
            return None
        return defuzzify_centroid(self.output.grid, self.aggregate)


def defuzzify_centroid(grid: np.ndarray, membership: np.ndarray) -> float:
    """Centre of mass of a sampled curve by the composite trapezoidal rule."""
    xs = np.asarray(grid, dtype=float)
    mu = np.asarray(membership, dtype=float)
    if xs.shape != mu.shape or xs.ndim != 1 or xs.size < 2:
        raise InputError("grid and membership must be 1-D arrays of equal length >= 2")
    area = np.trapezoid(mu, xs)
    if not area > 0.0:
        raise NoFireError("aggregate membership is identically zero")
    return float(np.trapezoid(mu * xs, xs) / area)


def infer(rb: RuleBase, crisp: Mapping[str, float]) -> InferenceResult:
    fuzzified = {}
    for name in rb.input_names:
        if name not in crisp or crisp[name] is None:
            raise InputError(f"missing input variable {name!r}")
        fuzzified[name] = fuzzify(rb.variables[name], crisp[name])
    strengths = dict.fromkeys(rb.output.classes, 0.0)
    for r in rb.rules:
        s = fire_rule(r, fuzzified)
        if s > strengths[r.consequent]:
            strengths[r.consequent] = s
    return InferenceResult(strengths, rb.output, fuzzified)


def rule_to_dict(rule: FuzzyRule) -> dict:
    return {"if": [[list(c) for c in g] for g in rule.antecedent], "then": rule.consequent}


def dumps_rules(rb: RuleBase) -> str:
    doc = {"classes": list(rb.output.classes), "rules": [rule_to_dict(r) for r in rb.rules]}
    return json.dumps(doc, indent=2) + "\n"


def rules_from_dict(
    doc: Mapping, variables: Mapping[str, FuzzyVariable], resolution: int = DEFAULT_RESOLUTION
) -> RuleBase:
    try:
        rules = [
            FuzzyRule(tuple(tuple(tuple(c) for c in g) for g in r["if"]), r["then"])
            for r in doc["rules"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed rule document: {exc}") from None
    classes = doc.get("classes")
    if classes is None:
        classes = list(dict.fromkeys(r.consequent for r in rules))
    return RuleBase(variables, rules, OutputVariable(tuple(classes), resolution))


def loads_rules(
    text: str, variables: Mapping[str, FuzzyVariable], resolution: int = DEFAULT_RESOLUTION
) -> RuleBase:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"rule document is not JSON: {exc}") from None
    return rules_from_dict(doc, variables, resolution)

