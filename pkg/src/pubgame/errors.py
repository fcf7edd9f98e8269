"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """A value (point, dimension, sample list) is malformed."""


class InvalidConfigError(ValueError):
    """A configuration parameter is outside its admissible range."""


class UnsupportedConfigurationError(ValueError):
    """A valid-looking combination that the requested operation cannot handle,
    e.g. gradient dynamics under a discontinuous ranking."""


class SearchBudgetError(RuntimeError):
    """Exhaustive search would exceed the allowed number of profiles."""
