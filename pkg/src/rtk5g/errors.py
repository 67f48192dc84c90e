"""Exception hierarchy."""


class Rtk5gError(Exception):
    """Base class for all package errors."""


class AlmanacParseError(Rtk5gError, ValueError):
    pass


class DomainError(Rtk5gError, ValueError):
    """Input outside the domain where an operation is defined."""


class DimensionError(Rtk5gError, ValueError):
    pass


class NumericalError(Rtk5gError, ArithmeticError):
    pass


class RankDeficiencyError(NumericalError):
    def __init__(self, message, size=None, rank=None):
        super().__init__(message)
        self.size = size
        self.rank = rank


class AvailabilityError(Rtk5gError):
    """The (N, L) configuration is not localizable or the mode is unusable."""


class DivergenceError(NumericalError):
    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ScenarioError(Rtk5gError):
    pass


class ConfigError(Rtk5gError, ValueError):
    pass
