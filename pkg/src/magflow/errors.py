"""Exception types shared across modules."""


class MagflowError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    code = "MagflowError"


class IntegralityError(MagflowError, ValueError):
    """2B(g-1) is not an integer, so no line bundle with that curvature exists."""

    code = "IntegralityError"


class RegimeError(MagflowError, ValueError):
    """Operation called outside the energy regime where it is defined."""

    code = "RegimeError"


class RangeError(MagflowError, ValueError):
    """Riemann-Roch dimension formula requested where its hypothesis fails."""

    code = "RangeError"


class ReductionError(MagflowError, RuntimeError):
    """Dirichlet descent did not terminate; the group is probably malformed."""

    code = "ReductionError"


class FitError(MagflowError, ValueError):
    code = "FitError"


class SamplingError(MagflowError, RuntimeError):
    code = "SamplingError"


class StepOverflowError(MagflowError, RuntimeError):
    code = "StepOverflowError"


class ConfigError(MagflowError, ValueError):
    """Invalid command-line flag or config-file entry."""

    code = "ConfigError"
