"""Simulation and analysis of single-pass fiber polarization squeezing."""

from .errors import (ConfigError, CorrectionError, DimensionError, InfeasibleTargetError,
                     KerrpolError, LinearizationError, ParameterError, TruncationError,
                     UndefinedReferenceError)
from .experiment import BenchConfig, NoiseTrace, calibrate_kerr, energy_sweep, rotate_sweep
from .gaussian import GaussianState, SymplecticTransform
from .stokes import PolarizationState

__version__ = "0.1.0"
