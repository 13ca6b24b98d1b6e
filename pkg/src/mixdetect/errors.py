"""Exception hierarchy shared by every module."""


class MixDetectError(Exception):
    """Base class for all package errors."""


class DomainError(MixDetectError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateDirectionError(DomainError):
    """The first-half mean is exactly zero so no projection axis exists."""


class NumericalError(MixDetectError, ArithmeticError):
    """A root-find or series evaluation failed to converge."""


class CalibrationError(MixDetectError):
    """Calibration cannot be built or does not match the data it is applied to."""


class ConfigurationError(MixDetectError):
    """An experiment or CLI configuration is incomplete or inconsistent."""


class MissingCalibrationError(ConfigurationError, CalibrationError):
    """An order-statistic procedure was asked to run without a calibration."""
