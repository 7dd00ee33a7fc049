"""Exception types raised by the design pipeline."""


class IacError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfig(IacError, ValueError):
    pass


class InfeasibleConfig(IacError):
    pass


class ConstructionExhausted(IacError):
    """Graph construction ran out of restarts.

    Attributes
    ----------
    receiver : int
        1-based receiver index at which the last attempt got stuck.
    """

    def __init__(self, message, receiver=None):
        super().__init__(message)
        self.receiver = receiver


class MalformedGraph(IacError):
    pass


class NumericalError(IacError):
    """Base for failures that come from floating-point conditioning."""


class SingularChannel(NumericalError):
    pass


class DegenerateEigenproblem(NumericalError):
    pass


class DimensionOverflow(NumericalError):
    pass


class RankDeficientPrecoder(NumericalError):
    pass


class SingularEffectiveChannel(NumericalError):
    pass


class ZeroVector(IacError, ValueError):
    pass


class MissingPoint(IacError, KeyError):
    pass


class RedrawBudgetExhausted(IacError):
    pass


class DuplicateAssignment(IacError, ValueError):
    pass
