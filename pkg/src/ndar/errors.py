"""Exception types shared across the package."""


class NdarError(Exception):
    pass


class DimensionError(NdarError, ValueError):
    """Bitstring/mask length does not match the Hamiltonian size."""


class InvalidSizeError(NdarError, ValueError):
    pass


class InvalidReferenceError(NdarError, ValueError):
    pass


class CapacityError(NdarError):
    """Requested problem exceeds a configured size cap."""


class ConfigError(NdarError, ValueError):
    pass


class EmptyInputError(NdarError, ValueError):
    pass


class UndefinedStatisticError(NdarError, ValueError):
    pass


class ParseError(NdarError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OptimizerError(NdarError):
    """Raised when the inner optimizer fails; carries the partial NDAR trace."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
