"""Exception hierarchy shared by all modules."""


class HotLatticeError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HotLatticeError, ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionMismatchError(DomainError):
    pass


class ResourceLimitError(HotLatticeError, RuntimeError):
    """The requested dense object would exceed the configured size cap."""


class NumericalQualityError(HotLatticeError, ArithmeticError):
    """A computed quantity failed a numerical-quality check."""


class GapClosingError(NumericalQualityError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class DegenerateLinkError(GapClosingError):
    pass


class RefinementError(NumericalQualityError):
    pass


class QuantizationError(NumericalQualityError):
    pass


class StateNotFoundError(HotLatticeError, LookupError):
    pass


class ConfigError(HotLatticeError, ValueError):
    def __init__(self, message, path=()):
        self.path = tuple(path)
        where = "/".join(str(p) for p in self.path)
        super().__init__(f"{where}: {message}" if where else message)
