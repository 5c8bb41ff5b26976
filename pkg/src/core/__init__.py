"""
NMSpectral — Core module: error hierarchy and runtime settings.

Public API
----------
>>> from src.core import ConfigurationError, get_settings
>>> get_settings().weight_mode.value in ("exp", "poly")
True
"""

from src.core.errors import (
    AliasingError,
    ClusterSoundnessError,
    ConfigurationError,
    DimensionCapError,
    IterationStepError,
    LinearSolverError,
    NeumannDivergedError,
    NMSpectralError,
    NormOverflowError,
    ParameterExcludedError,
    ResidualCheckError,
    ResolutionError,
    SingularClusterError,
    UnsupportedNonlinearityError,
)
from src.core.settings import RuntimeSettings, get_settings

__all__ = [
    # Errors
    "NMSpectralError",
    "ConfigurationError",
    "NormOverflowError",
    "AliasingError",
    "ResolutionError",
    "UnsupportedNonlinearityError",
    "LinearSolverError",
    "NeumannDivergedError",
    "SingularClusterError",
    "ParameterExcludedError",
    "ResidualCheckError",
    "DimensionCapError",
    "ClusterSoundnessError",
    "IterationStepError",
    # Settings
    "RuntimeSettings",
    "get_settings",
]
