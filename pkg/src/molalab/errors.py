"""Exception types shared across the package."""


class MolalabError(Exception):
    """Base class for package errors."""


class InvalidDimensionError(MolalabError, ValueError):
    """A dimension argument is zero, negative, or inconsistent."""


class InvalidRangeError(MolalabError, ValueError):
    """A scalar argument lies outside its admissible range."""


class ShapeError(MolalabError, ValueError):
    """Array arguments have incompatible shapes."""


class EmptyInputError(MolalabError, ValueError):
    """An operation received an empty collection."""


class NumericalError(MolalabError, RuntimeError):
    """An iterative numerical routine failed to converge."""


class UnsupportedGameError(MolalabError, ValueError):
    """The requested operation is defined only for another game family."""


class ConfigError(MolalabError, ValueError):
    """An experiment configuration (file or flags) is invalid."""


class DivergenceError(MolalabError, RuntimeError):
    """A trajectory blew up; carries the time at which it was detected."""

    def __init__(self, time: float, norm: float):
        super().__init__(f"trajectory diverged at t={time:.6g} (norm {norm:.3e})")
        self.time = time
        self.norm = norm
