"""Exception hierarchy for choicecheck.

All library errors derive from :class:`ChoiceCheckError` so callers can catch
one base class. :class:`SkipDraw` is control flow, not an error: conditional
statistics raise it to mark a simulated draw as unusable.
"""


class ChoiceCheckError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(ChoiceCheckError):
    """A required column or schema entry is missing or malformed."""


class DataParseError(ChoiceCheckError):
    """A cell could not be parsed; the message names the offending row."""


class ValidationError(ChoiceCheckError):
    """A dataset invariant is violated (duplicate rows, bad choice sets)."""


class SpecError(ChoiceCheckError):
    """A design specification references unknown variables or is inconsistent."""


class DimensionError(ChoiceCheckError):
    """Array shapes do not line up."""


class DomainError(ChoiceCheckError):
    """An input value is outside the mathematical domain (e.g. non-finite beta)."""


class SingularDesignError(ChoiceCheckError):
    """The design matrix is rank deficient; names the dependent columns."""


class DecompositionError(ChoiceCheckError):
    """A matrix factorization failed (covariance not positive definite)."""


class BinningError(ChoiceCheckError):
    """More bins requested than eligible observations."""


class CheckError(ChoiceCheckError):
    """A diagnostic check cannot be evaluated on the observed data."""


class DegenerateResultError(CheckError):
    """Every simulated draw was skipped; no reference distribution exists."""


class LabelingError(ChoiceCheckError):
    """An alternative-labeling mode was configured inconsistently."""


class CoverageError(ChoiceCheckError):
    """A category map does not cover every alternative row."""


class ConfigError(ChoiceCheckError):
    """A run configuration file or CLI flag combination is invalid."""


class SkipDraw(Exception):
    """Raised by a statistic to mark one simulated draw as unusable.

    Deliberately not a :class:`ChoiceCheckError`: it signals "record a skip
    and continue", never a failure.
    """
