"""Exception hierarchy shared across the package.

The CLI maps ``InputError`` to exit code 1 and ``ConfigurationError`` to 2.
"""


class CRCSError(Exception):
    pass


class InputError(CRCSError):
    """Unreadable, empty or malformed input data."""


class ParseError(InputError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigurationError(CRCSError):
    """Bad parameters or a request that does not fit the data."""


class UndefinedStatisticError(CRCSError, ValueError):
    pass


class ContractViolation(CRCSError, RuntimeError):
    pass


class GenerationError(CRCSError, RuntimeError):
    pass
