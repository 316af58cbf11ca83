"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1, file
problems exit 2 and numerical degeneracy exits 3.
"""


class HeaderParseError(ValueError):
    """A sequence header or box file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class TruncatedPayloadError(OSError):
    """Binary payload size disagrees with what the header declares."""

    def __init__(self, path, expected, actual):
        self.path = path
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"{path}: payload has {actual} bytes, expected {expected} bytes"
        )


class DegenerateError(ArithmeticError):
    """Numerical degeneracy (flat target region, singular spectrum, ...)."""
