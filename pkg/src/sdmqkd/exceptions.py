"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`SdmQkdError`
so callers (and the CLI) can map failures to exit codes.
"""


class SdmQkdError(Exception):
    """Base class for all package errors."""


class DomainError(SdmQkdError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class OutOfModelError(DomainError):
    """An empirical model is queried outside its validity range."""


class UndefinedVisibilityError(SdmQkdError, ArithmeticError):
    """Co- and cross-setting probabilities are both zero."""


class InsufficientDataError(SdmQkdError):
    """Not enough measurement settings or counts to estimate a quantity."""


class IllPosedReconstructionError(InsufficientDataError):
    """The tomography measurement matrix does not span the operator space."""


class NoDataError(InsufficientDataError):
    """All counts are zero."""


class ContractViolationError(SdmQkdError, ValueError):
    """An input breaks a documented precondition (e.g. unsorted tags)."""


class UnknownParityError(SdmQkdError):
    """Neither reflection counts nor a parity table determine a link's state."""


class IncompleteReportError(SdmQkdError):
    """Metrics are missing for some links of the topology."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__("missing metrics for links: " + ", ".join(self.missing))


class ConfigError(SdmQkdError):
    """The run configuration is malformed or references unknown names."""


class DataParseError(SdmQkdError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
