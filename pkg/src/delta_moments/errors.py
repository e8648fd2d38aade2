"""Exception hierarchy shared by all modules."""


class DeltaMomentsError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class DomainError(DeltaMomentsError, ValueError):
    pass


class PoleAtOne(DomainError):
    pass


class NonConvergent(DeltaMomentsError):
    pass


class CapacityError(DeltaMomentsError):
    pass


class RangeError(DeltaMomentsError, ValueError):
    pass


class FormatError(DeltaMomentsError):
    pass


class OrderError(DeltaMomentsError, ValueError):
    pass


class InsufficientData(DeltaMomentsError):
    pass


class UnsupportedBoundary(DeltaMomentsError):
    pass
