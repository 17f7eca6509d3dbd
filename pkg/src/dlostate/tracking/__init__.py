"""Cross-frame DLO tracking via displacement diffusion."""

from .aggregate import KnnAggregator, knn_aggregate
from .tracker import (
    TrackerConfig,
    TrackerNet,
    TrackingContext,
    build_tracking_condition,
    detect_failure,
    track_step,
)

__all__ = [
    "KnnAggregator",
    "knn_aggregate",
    "TrackerConfig",
    "TrackerNet",
    "TrackingContext",
    "build_tracking_condition",
    "detect_failure",
    "track_step",
]
