"""Exception types shared across the package."""


class VaritraceError(Exception):
    """Base class for all varitrace errors."""


class DomainError(VaritraceError):
    """A field or bathymetry was queried outside its declared domain."""

    def __init__(self, message: str, coordinate: str | None = None, value: float | None = None):
        if coordinate is not None and value is not None:
            message = f"{message} ({coordinate} = {value:g})"
        super().__init__(message)
        self.coordinate = coordinate
        self.value = value


class SteepRayError(VaritraceError):
    """Ray pulse reached |p| >= n; the range parametrization breaks down."""


class GeometryError(VaritraceError):
    """Invalid reflection geometry (non-unit vectors, outgoing ray, ...)."""


class SingularReflectionError(GeometryError):
    """Reflection at a genuine singularity of the jump matrix.

    Raised when the incident or reflected ray is vertical (t_r or t1_r
    near zero) or the hit is tangential (<t, N> near zero).
    """


class PerturbationTooLargeError(VaritraceError):
    """Finite-difference beam perturbation changed the bounce sequence."""


class ConfigError(VaritraceError):
    """Invalid run configuration file or parameters."""
