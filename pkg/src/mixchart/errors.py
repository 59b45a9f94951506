"""Exception hierarchy shared by the library and the CLI."""


class MixChartError(Exception):
    """Base class for all errors raised by mixchart."""


class ParameterError(MixChartError, ValueError):
    """A parameter lies outside its mathematical domain."""


class UnsupportedInputError(MixChartError, ValueError):
    """The input is valid in principle but not covered by the closed form."""


class TruncationError(MixChartError):
    """A series truncation bound leaves more tail mass than allowed."""


class GridTooSmallError(MixChartError):
    """The discretisation grid does not cover enough of the shift distribution."""


class ToleranceError(MixChartError):
    """A numerical cross-check exceeded its tolerance."""


class ConvergenceError(MixChartError):
    """An iterative solver failed to reach its residual target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(MixChartError):
    """A run configuration could not be parsed or validated."""
