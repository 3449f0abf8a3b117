"""Simulation of stochastic integrals against alpha-stable cylindrical Levy processes."""

__version__ = "0.1.0"

from .errors import ConfigurationError, CylStableError, NumericalError  # noqa: E402,F401
from .grid import TimeGrid  # noqa: E402,F401
from .hilbert import (  # noqa: E402,F401
    ContractionOperator, HSOperator, HVector, TruncationConfig, hs_norm, op_norm,
)
from .rng import RngStream  # noqa: E402,F401
from .sampler import DrivingPath, sample_driving_path, sample_sas  # noqa: E402,F401
