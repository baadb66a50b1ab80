"""Exception types shared across the package."""


class GeoflowError(Exception):
    """Base class for all package errors."""


class DomainError(GeoflowError):
    """Mathematically invalid input (non-positive metric, bad dimension, ...)."""


class BackendError(GeoflowError):
    """Field/operator applied to a backend it does not belong to."""


class ResolutionError(GeoflowError):
    """Field is not resolved on the grid (Nyquist-band energy too large)."""


class ExtinctionError(GeoflowError):
    """Flow horizon reaches (or gets too close to) sphere extinction."""


class CFLError(GeoflowError):
    """Parabolic stability bound violated for the requested step size."""


class DivergenceError(GeoflowError):
    """Integration produced non-finite values or a degenerate metric."""


class PositivityError(GeoflowError):
    """A quantity that must stay positive crossed zero."""


class StepError(GeoflowError):
    """Stored time grid too coarse for a dependent solve."""


class ConfigError(GeoflowError):
    """Scenario configuration violates the schema; message carries the field path."""
