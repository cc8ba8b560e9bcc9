"""Exception hierarchy shared by all modules."""


class GkquadError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(GkquadError, ValueError):
    """Malformed arguments: dimension mismatches, empty sets, bad parameters."""


class NumericalBreakdownError(GkquadError, ArithmeticError):
    """A pivot or power-function value fell below the breakdown threshold."""


class SelectionError(GkquadError, RuntimeError):
    """Logic error in greedy bookkeeping, e.g. selecting an index twice."""


class ConfigError(GkquadError, ValueError):
    """Experiment configuration could not be parsed or validated."""


class DataFormatError(GkquadError, ValueError):
    """A CSV input is missing or malformed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
