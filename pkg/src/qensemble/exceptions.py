"""Exception hierarchy shared by every qensemble module."""


class QEnsembleError(Exception):
    """Base class for all errors raised by qensemble."""


class CapacityError(QEnsembleError):
    """Requested register is larger than the simulator allows."""


class RegisterError(QEnsembleError, IndexError):
    """Qubit range out of bounds, non-contiguous or overlapping."""


class NumericError(QEnsembleError, ArithmeticError):
    """Degenerate numerical state, e.g. measuring a zero-norm vector."""


class DomainError(QEnsembleError, ValueError):
    """Argument outside its mathematical domain."""


class ConfigurationError(QEnsembleError, ValueError):
    """Invalid estimator, oracle or experiment configuration."""


class IngestionError(QEnsembleError, ValueError):
    """Malformed dataset or model file."""


class TrainingError(QEnsembleError, ValueError):
    """Training data cannot produce a classifier."""
