"""Synthetic DLO simulation, single-frame state estimation, and tracking.

Subpackages:
    sim        rope dynamics, rendering, occlusion, dataset generation
    geometry   containers, sampling, canonical normalization, splines, metrics
    estimator  two-branch single-frame estimation networks
    diffusion  conditional diffusion over node chains
    tracking   displacement diffusion across frames
    pipeline   configuration, training, inference, evaluation
"""

from . import diffusion, estimator, geometry, pipeline, sim, tracking
from .errors import (
    ConfigError,
    DataError,
    DegenerateVoteError,
    DloStateError,
    EmptyObservationError,
    FitError,
    NonFiniteLossError,
    NumericError,
    OverstretchError,
    ShapeError,
)

__version__ = "0.1.0"

__all__ = [
    "diffusion",
    "estimator",
    "geometry",
    "pipeline",
    "sim",
    "tracking",
    "ConfigError",
    "DataError",
    "DegenerateVoteError",
    "DloStateError",
    "EmptyObservationError",
    "FitError",
    "NonFiniteLossError",
    "NumericError",
    "OverstretchError",
    "ShapeError",
    "__version__",
]
