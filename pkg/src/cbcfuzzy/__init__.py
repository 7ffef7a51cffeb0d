"""Fuzzy labelling of complete-blood-count records and a random-forest classifier trained on the labels."""

__version__ = "0.1.0"

from .dataset import CbcRecord, Dataset, generate_synthetic, load_csv
from .forest import Forest, ForestConfig, fit
from .inference import FuzzyRule, RuleBase, defuzzify_centroid, fire_rule, infer
from .knowledge import DiseaseClass, builtin_rules, builtin_variables, crisp_oracle, label
from .membership import FuzzyVariable, Gaussian, Trapezoidal, Triangular, evaluate_mf, fuzzify
from .metrics import ConfusionMatrix, confusion, render, report

__all__ = [
    "CbcRecord",
    "ConfusionMatrix",
    "Dataset",
    "DiseaseClass",
    "Forest",
    "ForestConfig",
    "FuzzyRule",
    "FuzzyVariable",
    "Gaussian",
    "RuleBase",
    "Trapezoidal",
    "Triangular",
    "builtin_rules",
    "builtin_variables",
    "confusion",
    "crisp_oracle",
    "defuzzify_centroid",
    "evaluate_mf",
    "fire_rule",
    "fit",
    "fuzzify",
    "generate_synthetic",
    "infer",
    "label",
    "load_csv",
    "render",
    "report",
]
