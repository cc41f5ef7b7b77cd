"""Error taxonomy shared across the package."""


class KronsafError(Exception):
    """Base class for package errors."""


class DimensionError(KronsafError, ValueError):
    """Array shape or length violates an operation's contract."""


class ParameterError(KronsafError, ValueError):
    """Scalar parameter outside its admissible range."""


class IngestionError(KronsafError, ValueError):
    """External file could not be read as a usable signal."""


class DesignError(KronsafError, ValueError):
    """Filter-bank design request is infeasible."""


class ConfigError(KronsafError, ValueError):
    """Experiment configuration is invalid; message names the field."""
