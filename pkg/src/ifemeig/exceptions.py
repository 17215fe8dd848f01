"""Exception hierarchy shared by all modules."""


class IFEMError(Exception):
    """Base class for errors raised by :mod:`ifemeig`."""


class InvalidParameterError(IFEMError, ValueError):
    pass


class InvalidMeshError(IFEMError, ValueError):
    pass


class MeshParseError(InvalidMeshError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshTooCoarseError(IFEMError):
    """The interface crosses an edge more than once."""


class SingularBasisError(IFEMError):
    """Immersed basis constraint system could not be solved."""

    def __init__(self, message, element=None, geometry=None):
        self.element = element
        self.geometry = geometry
        super().__init__(message)


class DefinitenessError(IFEMError, ArithmeticError):
    pass


class ConvergenceError(IFEMError, RuntimeError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class RangeExhaustedError(IFEMError):
    pass


class DomainError(IFEMError, ValueError):
    """Argument outside the domain of a special function."""
