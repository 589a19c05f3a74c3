class SurrogateError(Exception):
    """Base class for all errors raised by the surrogate library."""


class InputError(SurrogateError, ValueError):
    """Invalid arguments, malformed files or unknown configuration keys."""


class InfeasibleError(SurrogateError):
    """No hyper-parameter candidate produced a factorizable correlation matrix."""


class UndefinedResultError(SurrogateError):
    """A diagnostic has no defined value for the given inputs."""


class SlicingError(InputError):
    """A slice layout cannot support the requested appendant window."""
