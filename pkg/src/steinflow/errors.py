"""Exception types shared across the package."""


class SteinflowError(Exception):
    """Base class for all steinflow errors."""


class DimensionMismatchError(SteinflowError):
    """Inputs whose array shapes are incompatible."""


class DegenerateEnsembleError(SteinflowError):
    """Ensemble state on which an operation is undefined (e.g. all particles coincide)."""


class UnsupportedKernelError(SteinflowError):
    """Operation not available for the requested kernel family."""


class DatasetFormatError(SteinflowError):
    """Malformed dataset file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigError(SteinflowError):
    """Invalid experiment configuration."""


class NumericalError(SteinflowError):
    """Numerical failure (singular solve, NaN); carries the time-step index when known."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step
