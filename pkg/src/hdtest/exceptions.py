"""Exception hierarchy shared by all hdtest modules."""


class HDTestError(Exception):
    """Base class for all errors raised by hdtest."""


class DataShapeError(HDTestError):
    """Inputs have incompatible shapes, non-finite entries, or bad values."""


class PairingError(DataShapeError):
    """Paired samples do not have matching row counts."""


class DegenerateDataError(HDTestError):
    """Data admits no valid answer (e.g. all points identical, zero variance)."""


class InsufficientSamplesError(HDTestError):
    """Too few samples for the requested estimator."""


class ConfigError(HDTestError):
    """Invalid experiment or command configuration."""


class NumericalError(HDTestError):
    """A numerical routine failed to converge or produced garbage."""
