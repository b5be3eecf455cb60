"""Exception hierarchy shared by every module.

The CLI maps ``ValidationError``/``UsageError`` to exit code 2 and
``NumericError``/``ResourceError``/``SearchFailure`` to exit code 3.
"""


class EAGroupError(Exception):
    pass


class UsageError(EAGroupError, ValueError):
    """Arguments that do not fit together (e.g. genomes from different spaces)."""


class ValidationError(EAGroupError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ConfigurationError(ValidationError):
    pass


class ResourceError(EAGroupError, RuntimeError):
    pass


class NumericError(EAGroupError, ArithmeticError):
    pass


class SearchFailure(EAGroupError, RuntimeError):
    """A search ran out of budget; ``best`` holds the best candidate seen."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
