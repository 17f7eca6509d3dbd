"""Geometric primitives: containers, sampling, normalization, splines, metrics."""

from .cloud import (
    FRAME_CANONICAL,
    FRAME_RAW,
    MetricsRecord,
    NodeSequence,
    PointCloud,
    polyline_arc_lengths,
    resample_polyline,
)
from .canonical import CanonicalTransform, apply_transform, compute_canonical_transform
from .fps import farthest_point_sample
from .metrics import compute_metrics, node_smoothness
from .spline import spline_postprocess

__all__ = [
    "FRAME_CANONICAL",
    "FRAME_RAW",
    "MetricsRecord",
    "NodeSequence",
    "PointCloud",
    "CanonicalTransform",
    "apply_transform",
    "compute_canonical_transform",
    "farthest_point_sample",
    "compute_metrics",
    "node_smoothness",
    "polyline_arc_lengths",
    "resample_polyline",
    "spline_postprocess",
]
