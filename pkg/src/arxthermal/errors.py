"""Exception hierarchy shared by every module of the toolkit."""


class ArxError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(ArxError, ValueError):
    """An argument is outside its documented domain."""


class SchemaError(ArxError, KeyError):
    """A column named by a dataset schema is missing."""

    def __str__(self):
        # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class ParseError(ArxError, ValueError):
    """A file could not be parsed; the message carries the location."""


class DataError(ArxError, ValueError):
    """Data is well-formed but numerically unusable (NaN, Inf, non-uniform)."""


class SizeError(ArxError, ValueError):
    """Not enough samples for the requested model orders."""


class ShapeError(ArxError, ValueError):
    """Input signals do not line up with what a model expects."""


class RankError(ArxError, ArithmeticError):
    """A least-squares solve was asked for with no singular values left."""


class DivergenceError(ArxError, ArithmeticError):
    """A recursive simulation produced a non-finite sample."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"simulation diverged at sample {index}")


class DegenerateError(ArxError, ValueError):
    """The measured signal is constant, so the fit metric is undefined."""


class SelectionError(ArxError):
    """Order selection could not produce a usable model."""


class VersionError(ArxError, ValueError):
    """A model file carries an unsupported format version."""


class ConfigError(ArxError, ValueError):
    """A scenario or run configuration is invalid."""
