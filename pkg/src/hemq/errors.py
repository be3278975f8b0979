"""Exception hierarchy for hemq.

Every error carries the name of the module it originates from so the CLI can
report provenance alongside the message.
"""

from typing import Any, Optional


class HemqError(Exception):
    """Base class for all hemq errors."""

    module = "hemq"


class KernelInputError(HemqError, ValueError):
    """Points with mismatched dimensions or non-finite coordinates."""

    module = "kernels"


class UnsupportedParameterError(HemqError, ValueError):
    """A parameter outside the range an identity or formula supports."""

    module = "kernels"


class MeasureError(HemqError, ValueError):
    """Invalid measure construction."""

    module = "measures"


class SignedMeasureSamplingError(MeasureError):
    """Sampling was requested from a measure with negative weights."""


class MassMismatchError(HemqError, ValueError):
    """Squared distance requested between measures of different total mass."""

    module = "distance"


class DistanceInputError(HemqError, ValueError):
    """Empty batches or quantizers that are not probability measures."""

    module = "distance"


class InsufficientSamplesError(HemqError, ValueError):
    """Too few samples for an unbiased estimator."""

    module = "estimators"


class OptimizerInputError(HemqError, ValueError):
    """Invalid optimizer input (infeasible mass, wrong kernel, bad inverse CDF)."""

    module = "optimizers"


class DivergenceError(HemqError, RuntimeError):
    """The optimized loss became non-finite.

    ``record`` holds the trajectory up to the last finite iteration.
    """

    module = "optimizers"

    def __init__(self, message: str, record: Optional[Any] = None) -> None:
        super().__init__(message)
        self.record = record


class MetricsInputError(HemqError, ValueError):
    """Label vectors of different lengths or more clusters than rows."""

    module = "metrics"


class DatasetFormatError(HemqError, ValueError):
    """Malformed CSV or IDX input."""

    module = "io"

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(HemqError, ValueError):
    """Malformed or inconsistent run configuration."""

    module = "io"
