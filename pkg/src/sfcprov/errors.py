"""Exception types raised across the package."""


class SfcError(Exception):
    """Base class for all package errors."""


class InvalidConfig(SfcError, ValueError):
    pass


class NoPath(SfcError):
    pass


class InsufficientResources(SfcError):
    pass


class InvalidRelease(SfcError):
    pass


class UnknownPop(SfcError, KeyError):
    pass


class UnknownVnf(SfcError, KeyError):
    pass


class UnknownFlavor(SfcError, KeyError):
    pass


class ZeroCapacity(SfcError, ValueError):
    pass


class UnpinnedEndpoint(SfcError, ValueError):
    pass


class InvalidEmbedding(SfcError, ValueError):
    pass


class Infeasible(SfcError):
    """Exhaustive search proved that no feasible assignment exists."""


class BudgetExceeded(SfcError):
    """Search stopped at its node or time limit before proving optimality."""
