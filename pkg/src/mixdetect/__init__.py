"""Detection of two-component Gaussian mixtures in d dimensions."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CalibrationError,
    ConfigurationError,
    DegenerateDirectionError,
    DomainError,
    MixDetectError,
    NumericalError,
)
from .orderstats import OrderStatCalibration, calibrate_alpha_n, dyadic_grid  # noqa: E402
from .procedures import Sample, calibration_for, psi1, psi2, psi3, psi3_level, split_project  # noqa: E402
from .report import Procedure, TestReport  # noqa: E402

__all__ = [
    "CalibrationError", "ConfigurationError", "DegenerateDirectionError", "DomainError",
    "MixDetectError", "NumericalError", "OrderStatCalibration", "Procedure", "Sample",
    "TestReport", "calibrate_alpha_n", "calibration_for", "dyadic_grid", "psi1", "psi2", "psi3",
    "psi3_level", "split_project",
]
