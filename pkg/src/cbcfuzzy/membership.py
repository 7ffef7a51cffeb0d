"""Membership functions, linguistic variables and fuzzification."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .errors import ConfigurationError, InputError

FAMILIES = ("trapezoidal", "triangular", "gaussian")


@dataclass(frozen=True)
class Triangular:
    a: float
    b: float
    c: float

    shape = "triangular"

    def __post_init__(self):
        if not all(math.isfinite(p) for p in self.params):
            raise ConfigurationError(f"non-finite triangular parameters {self.params}")
        if not (self.a <= self.b <= self.c) or self.a == self.c:
            raise ConfigurationError(f"triangular needs a <= b <= c with a < c, got {self.params}")

    @property
    def params(self) -> tuple:
        return (self.a, self.b, self.c)

    @property
    def support(self) -> tuple:
        return (self.a, self.c)

    @property
    def peak(self) -> float:
        return self.b

    def __call__(self, x: float) -> float:
        if x < self.a or x > self.c:
            return 0.0
        if x == self.b:
            return 1.0
        if x < self.b:
            return (x - self.a) / (self.b - self.a)
        return (self.c - x) / (self.c - self.b)


@dataclass(frozen=True)
class Trapezoidal:
    a: float
    b: float
    c: float
    d: float

    shape = "trapezoidal"

    def __post_init__(self):
        if not all(math.isfinite(p) for p in self.params):
            raise ConfigurationError(f"non-finite trapezoidal parameters {self.params}")
        if not (self.a <= self.b <= self.c <= self.d) or self.a == self.d:
            raise ConfigurationError(
                f"trapezoidal needs a <= b <= c <= d with a < d, got {self.params}"
            )

    @property
    def params(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    @property
    def support(self) -> tuple:
        return (self.a, self.d)

    @property
    def peak(self) -> float:
        return 0.5 * (self.b + self.c)

    def __call__(self, x: float) -> float:
        if x < self.a or x > self.d:
            return 0.0
        if self.b <= x <= self.c:
            return 1.0
        if x < self.b:
            return (x - self.a) / (self.b - self.a)
        return (self.d - x) / (self.d - self.c)


@dataclass(frozen=True)
class Gaussian:
    center: float
    sigma: float

    shape = "gaussian"

    def __post_init__(self):
        if not (math.isfinite(self.center) and math.isfinite(self.sigma)):
            raise ConfigurationError(f"non-finite gaussian parameters {self.params}")
        if self.sigma <= 0:
            raise ConfigurationError(f"gaussian sigma must be positive, got {self.sigma}")

    @property
    def params(self) -> tuple:
        return (self.center, self.sigma)

    @property
    def support(self) -> tuple:
        return (-math.inf, math.inf)

    @property
    def peak(self) -> float:
        return self.center

    def __call__(self, x: float) -> float:
        z = (x - self.center) / self.sigma
        return math.exp(-0.5 * z * z)


MembershipFunction = Union[Triangular, Trapezoidal, Gaussian]

_SHAPES = {"triangular": Triangular, "trapezoidal": Trapezoidal, "gaussian": Gaussian}


def make_mf(shape: str, params: Sequence[float]) -> MembershipFunction:
    try:
        cls = _SHAPES[shape]
    except KeyError:
        raise ConfigurationError(f"unknown membership shape {shape!r}") from None
    try:
        return cls(*(float(p) for p in params))
    except TypeError:
        raise ConfigurationError(f"wrong parameter count for {shape}: {list(params)}") from None


def evaluate_mf(mf: MembershipFunction, x: float) -> float:
    """Degree of membership of ``x``, clamped to [0, 1]."""
    return min(1.0, max(0.0, mf(x)))


@dataclass(frozen=True)
class LinguisticTerm:
    label: str
    mf: MembershipFunction


@dataclass(frozen=True)
class FuzzyVariable:
    """A measurement axis with an ordered family of labelled terms.

    Construction checks that labels are unique, that piecewise-linear
    supports stay inside the universe, that terms are sorted by peak, and
    that every point of the universe has positive membership in some term.
    """

    name: str
    universe: tuple
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "universe", tuple(float(u) for u in self.universe))
        object.__setattr__(self, "terms", tuple(self.terms))
        umin, umax = self.universe
        if not (math.isfinite(umin) and math.isfinite(umax) and umin < umax):
            raise ConfigurationError(f"{self.name}: bad universe {self.universe}")
        if not self.terms:
            raise ConfigurationError(f"{self.name}: no terms")
        labels = [t.label for t in self.terms]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"{self.name}: duplicate term labels {labels}")
        for t in self.terms:
            lo, hi = t.mf.support
            if isinstance(t.mf, Gaussian):
                lo = hi = t.mf.center
            if lo < umin or hi > umax:
                raise ConfigurationError(
                    f"{self.name}.{t.label}: support {t.mf.support} leaves universe {self.universe}"
                )
        peaks = [t.mf.peak for t in self.terms]
        if any(p2 < p1 for p1, p2 in zip(peaks, peaks[1:])):
            raise ConfigurationError(f"{self.name}: terms not ordered by position {labels}")
        self._check_coverage()

    def _check_coverage(self):
        # Between consecutive breakpoints every piecewise-linear term is linear, so
        # checking breakpoints and the midpoints between them is exhaustive.
        umin, umax = self.universe
        points = {umin, umax}
        for t in self.terms:
            if not isinstance(t.mf, Gaussian):
                points.update(p for p in t.mf.params if umin <= p <= umax)
        pts = sorted(points)
        probes = pts + [0.5 * (p + q) for p, q in zip(pts, pts[1:])]
        for x in probes:
            if max(evaluate_mf(t.mf, x) for t in self.terms) <= 0.0:
                raise ConfigurationError(f"{self.name}: no term covers x={x}")

    @property
    def labels(self) -> tuple:
        return tuple(t.label for t in self.terms)

    def term(self, label: str) -> LinguisticTerm:
        for t in self.terms:
            if t.label == label:
                return t
        raise KeyError(label)

    def clamp(self, x: float) -> float:
        umin, umax = self.universe
        return min(umax, max(umin, x))

    def fuzzify(self, x: float) -> dict:
        return fuzzify(self, x)


def fuzzify(var: FuzzyVariable, x: float) -> dict:
    """Map a crisp value to ``{label: degree}``; out-of-universe values are clamped."""
    try:
        x = float(x)
    except (TypeError, ValueError):
        raise InputError(f"{var.name}: value {x!r} is not a number") from None
    if not math.isfinite(x):
        raise InputError(f"{var.name}: value {x} is not finite")
    x = var.clamp(x)
    return {t.label: evaluate_mf(t.mf, x) for t in var.terms}


def boundary_terms(
    universe: Sequence[float],
    boundaries: Sequence[float],
    delta: float,
    family: str = "trapezoidal",
    labels: Sequence[str] = ("low", "normal", "high"),
) -> list:
    """Build terms from crisp interval boundaries.

    ``trapezoidal``: each boundary becomes a band ``[b - delta, b + delta]`` in
    which the two neighbouring terms ramp linearly and sum to 1; the outer
    terms are shouldered up to the universe edges.
    ``triangular``: same supports, peaking at each crisp-interval midpoint (the
    outer terms peak at the universe edges).
    ``gaussian``: centred on each crisp-interval midpoint with sigma equal to a
    quarter of the interval width.
    """
    umin, umax = (float(u) for u in universe)
    bounds = [float(b) for b in boundaries]
    if len(labels) != len(bounds) + 1:
        raise ConfigurationError(f"{len(bounds)} boundaries need {len(bounds) + 1} labels")
    if not delta > 0:
        raise ConfigurationError(f"transition half-width must be positive, got {delta}")
    edges = [umin] + bounds + [umax]
    n = len(labels)
    for i, (lo, hi) in enumerate(zip(edges, edges[1:])):
        # bands may touch but must not overlap or leave the universe
        if hi - lo < delta * ((i > 0) + (i < n - 1)):
            raise ConfigurationError(f"interval [{lo}, {hi}] too narrow for delta={delta}")
    terms = []
    for i, label in enumerate(labels):
        lo, hi = edges[i], edges[i + 1]
        left = (lo - delta, lo + delta) if i > 0 else (umin, umin)
        right = (hi - delta, hi + delta) if i < n - 1 else (umax, umax)
        if family == "trapezoidal":
            mf = Trapezoidal(left[0], left[1], right[0], right[1])
        elif family == "triangular":
            if i == 0:
                peak = umin
            elif i == n - 1:
                peak = umax
            else:
                peak = 0.5 * (lo + hi)
            mf = Triangular(left[0], peak, right[1])
        elif family == "gaussian":
            mf = Gaussian(0.5 * (lo + hi), (hi - lo) / 4.0)
        else:
            raise ConfigurationError(f"unknown membership family {family!r}")
        terms.append(LinguisticTerm(label, mf))
    return terms


def variable_to_dict(var: FuzzyVariable) -> dict:
    return {
        "name": var.name,
        "universe": list(var.universe),
        "terms": [
            {"label": t.label, "shape": t.mf.shape, "params": list(t.mf.params)}
            for t in var.terms
        ],
    }


def variable_from_dict(doc: Mapping) -> FuzzyVariable:
    try:
        terms = [LinguisticTerm(t["label"], make_mf(t["shape"], t["params"])) for t in doc["terms"]]
        return FuzzyVariable(doc["name"], tuple(doc["universe"]), tuple(terms))
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed variable definition: {exc}") from None


def dumps_variables(variables: Iterable[FuzzyVariable]) -> str:
    return json.dumps({"variables": [variable_to_dict(v) for v in variables]}, indent=2) + "\n"


def loads_variables(text: str) -> list:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"variables document is not JSON: {exc}") from None
    items = doc["variables"] if isinstance(doc, dict) and "variables" in doc else doc
    if isinstance(items, dict):
        items = [items]
    return [variable_from_dict(d) for d in items]
