"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ValidationError -> 1, FormatError -> 2,
NumericError -> 3.
"""


class XPartsError(Exception):
    """Base class for all package errors."""


class ValidationError(XPartsError):
    """Input violates a documented invariant or precondition."""


class FormatError(XPartsError):
    """A file does not conform to one of the text formats."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class NumericError(XPartsError):
    """Numerical failure, e.g. divergent gradient descent."""
