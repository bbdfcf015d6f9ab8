"""Exception hierarchy shared across the package.

Two top-level families matter for the CLI exit codes: ``ValidationError``
(bad input or configuration, exit 1) and ``BackendError`` (a model or
backend misbehaved, exit 2).
"""


class FairtextError(Exception):
    """Base class for all package errors."""


class ValidationError(FairtextError):
    """Invalid input, configuration, or precondition violation."""


class DataFormatError(ValidationError):
    """A data file is missing, malformed, or lacks required columns."""


class SingleClassError(ValidationError):
    """Training data contains only one label."""


class BackendError(FairtextError):
    """A model backend failed or violated its contract."""


class NoFillError(BackendError):
    """Every beam died during sequential infilling: no admissible token
    for some slot."""


class ModelLoadError(BackendError):
    """A persisted model directory could not be loaded."""
