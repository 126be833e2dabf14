"""Exception hierarchy shared by all modules."""


class McfXtError(Exception):
    """Base class for every error raised by the package."""


class DomainError(McfXtError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ModelDomainError(DomainError):
    """The physical model is not valid for the given parameters."""


class ConfigurationError(McfXtError, ValueError):
    """Inconsistent or unsupported configuration."""


class AnalysisError(McfXtError, ValueError):
    """A statistic cannot be computed on the given data."""


class FitError(McfXtError, RuntimeError):
    """A fit failed to converge or was ill-posed."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ParseError(McfXtError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UsageError(McfXtError, ValueError):
    """A command or helper was called with an unsupported request."""
