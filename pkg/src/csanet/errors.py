"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: usage errors -> 1, data/format/config
errors -> 2, numerical failures -> 3.
"""


class CsanetError(Exception):
    """Base class for all package errors."""


class DimensionError(CsanetError, ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ConfigurationError(CsanetError, ValueError):
    """A hyperparameter or config field is invalid or inconsistent."""


class DataError(CsanetError, ValueError):
    """Input data violates a precondition (bad label, bad range, ...)."""


class FormatError(CsanetError, ValueError):
    """A serialized file is malformed. Carries the byte offset of the fault."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class StateError(CsanetError, RuntimeError):
    """An object is in the wrong state for the requested operation."""


class NumericalError(CsanetError, ArithmeticError):
    """A computation produced non-finite values or failed a numeric check."""
