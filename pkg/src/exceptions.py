"""Error types raised by the toolkit.

User-facing problems (bad system files, bad estimate specs, violated
preconditions) are ``UserException`` subclasses so the component runner
reports them without a stack trace. Numeric misuse maps onto the standard
library hierarchy.
"""

from keboola.component.exceptions import UserException


class SystemDefinitionError(UserException):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


class EstimateSpecError(UserException):
    pass


class PreconditionError(UserException):
    def __init__(self, message: str, certificate=None):
        self.certificate = certificate
        super().__init__(message)


class DomainError(ValueError):
    pass


class PositiveDefinitenessError(DomainError):
    pass


class FunctionClassError(ValueError):
    pass


class FamilyIndexError(IndexError):
    pass


class GridMismatchError(ValueError):
    pass


class ConstructionError(RuntimeError):
    """A construct-and-certify loop ran out of attempts."""

    def __init__(self, message: str, certificate=None):
        self.certificate = certificate
        super().__init__(message)


class FamilyClosureError(RuntimeError):
    pass
