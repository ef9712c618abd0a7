"""Exception hierarchy shared by all modules."""


class HypTimesError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(HypTimesError, ValueError):
    """Argument outside the domain where an operation is defined."""


class SingularityError(HypTimesError, ValueError):
    """A point lies (numerically) on the singular set."""


class ParameterError(HypTimesError, ValueError):
    """Invalid hyperbolic-time parameters."""


class NumericError(HypTimesError, ArithmeticError):
    """A non-finite value appeared while iterating a map."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InvalidOrbitError(HypTimesError):
    """The orbit hit the singular set before the requested quantity was known."""

    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class SamplingError(HypTimesError):
    """Too many sampled orbits were invalid to complete an ensemble."""


class DiscretizationError(HypTimesError):
    """An Ulam cell ended up without usable samples."""


class ConvergenceError(HypTimesError):
    """Power iteration did not reach the requested tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class InconclusiveCheck(HypTimesError):
    """A nearby-orbit check could not find a separation that tracks the orbit."""


class InsufficientDataError(HypTimesError, ValueError):
    """Too few nonzero histogram entries for a regression."""


class ConfigError(HypTimesError):
    """One or more configuration violations; ``violations`` lists all of them."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
