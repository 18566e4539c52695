"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage problems (ValueError and
click errors) exit 1, data/manifest problems exit 2, everything else
raised from inside a pipeline stage exits 3.
"""


class FairabstainError(Exception):
    """Base class for all package-specific errors."""


class ManifestError(FairabstainError):
    """The dataset manifest is inconsistent or does not match the data."""


class DataError(FairabstainError):
    """A data file cannot be interpreted under the given manifest."""


class FitError(FairabstainError):
    """The built-in classifier cannot be fitted on the given data."""


class ScoringError(FairabstainError):
    """A model cannot produce a probability for a requested instance."""


class UndefinedSliftError(FairabstainError):
    """No transaction verifies the negated sensitive part of a rule."""


class SituationTestError(FairabstainError):
    """Situation testing cannot run (e.g. not enough group neighbors)."""


class PipelineError(FairabstainError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
