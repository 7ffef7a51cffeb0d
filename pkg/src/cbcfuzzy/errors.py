"""Exception types shared across the package."""


class CbcFuzzyError(Exception):
    """Base class; the CLI maps every subclass to exit code 1."""


class ConfigurationError(CbcFuzzyError, ValueError):
    """Invalid membership parameters, variable definitions or rule references."""


class InputError(CbcFuzzyError, ValueError):
    """A measurement is missing, non-finite, or has the wrong shape."""


class NoFireError(CbcFuzzyError):
    """Every rule has zero firing strength, so there is no centroid."""


class SizeError(CbcFuzzyError, ValueError):
    """Not enough samples for the requested operation."""


class FormatError(CbcFuzzyError, ValueError):
    """A CSV or JSON document does not match the expected layout."""


class TrainingError(CbcFuzzyError):
    """Training cannot proceed (e.g. fewer than two classes)."""
