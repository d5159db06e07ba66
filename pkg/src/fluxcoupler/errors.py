"""Exception types shared across the package."""


class FluxcouplerError(Exception):
    """Base class for all package errors."""


class ConfigError(FluxcouplerError):
    """Malformed or unknown configuration content."""


class LabelingError(FluxcouplerError):
    """Eigenstate could not be assigned a bare product label unambiguously."""

    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = candidates or []


class LandscapeError(FluxcouplerError):
    """A flux-landscape search left its trust region or found no optimum."""


class AccuracyError(FluxcouplerError):
    """An adaptive numerical routine could not reach its tolerance."""


class CalibrationError(FluxcouplerError):
    """A calibration scan was degenerate or non-unimodal."""


class FitError(FluxcouplerError):
    """A fit failed to converge; carries the best-so-far state."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
