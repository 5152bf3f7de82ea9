"""Exception hierarchy shared by all modules."""


class LMArrayError(Exception):
    """Base class for package errors."""


class CouplingValidationError(LMArrayError):
    """A coupling matrix violated one or more invariants."""

    def __init__(self, report):
        self.report = report
        super().__init__("invalid coupling matrix: " + "; ".join(str(v) for v in report))


class MatrixParseError(LMArrayError):
    def __init__(self, message, line, column=None):
        self.line = line
        self.column = column
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")


class NumericalError(LMArrayError):
    """Singular or ill-conditioned linear system."""


class SynthesisError(LMArrayError):
    def __init__(self, message, port=None):
        self.port = port
        super().__init__(message)


class ConfigError(LMArrayError):
    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")
