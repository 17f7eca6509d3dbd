"""Core array containers for point clouds and ordered node chains.

Coordinates are meters. The ``frame`` tag distinguishes raw sensor/world
coordinates from the canonical (normalized) frame used by the estimators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError

FRAME_RAW = "raw"
FRAME_CANONICAL = "canonical"
_FRAMES = (FRAME_RAW, FRAME_CANONICAL)


def _as_points(arr, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim != 2 or out.shape[1] != 3:
        raise ShapeError(f"{name} must have shape (n, 3), got {out.shape}")
    return out


@dataclass
class PointCloud:
    """Unordered 3-D points with a coordinate-frame tag."""

    points: np.ndarray  # (n, 3)
    frame: str = FRAME_RAW

    def __post_init__(self) -> None:
        self.points = _as_points(self.points, "points")
        if self.frame not in _FRAMES:
            raise ShapeError(f"unknown frame tag {self.frame!r}")

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class NodeSequence:
    """Ordered chain of node positions running from one DLO end to the other."""

    nodes: np.ndarray  # (m, 3), index 0 and -1 are the endpoints
    frame: str = FRAME_RAW

    def __post_init__(self) -> None:
        self.nodes = _as_points(self.nodes, "nodes")
        if self.nodes.shape[0] < 2:
            raise ShapeError("a node sequence needs at least 2 nodes")
        if self.frame not in _FRAMES:
            raise ShapeError(f"unknown frame tag {self.frame!r}")

    def __len__(self) -> int:
        return self.nodes.shape[0]

    @property
    def endpoints(self) -> np.ndarray:
        """(2, 3) array holding the first and last node."""
        return self.nodes[[0, -1]]

    def length(self) -> float:
        """Total polyline length in the sequence's own units."""
        return float(np.linalg.norm(np.diff(self.nodes, axis=0), axis=1).sum())

    def reversed(self) -> "NodeSequence":
        return NodeSequence(self.nodes[::-1].copy(), self.frame)


@dataclass
class MetricsRecord:
    """Per-frame quality metrics for a predicted node chain.

    mpne_mm    mean per-node Euclidean error, millimeters, best of the two
               ground-truth orientations
    pcn        fraction of nodes with error below the threshold, in [0, 1]
    nss        mean squared turning angle along the prediction, radians^2
    """

    mpne_mm: float
    pcn: float
    nss: float
    threshold_mm: float = 10.0
    extras: dict = field(default_factory=dict)


def polyline_arc_lengths(points: np.ndarray) -> np.ndarray:
    """Cumulative arc length along a polyline, starting at 0."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def resample_polyline(points: np.ndarray, count: int) -> np.ndarray:
    """Resample a polyline to ``count`` points uniformly spaced in arc length.

    The first and last output points equal the original endpoints exactly.
    """
    pts = _as_points(points, "points")
    if pts.shape[0] < 2:
        raise ShapeError("need at least 2 points to resample")
    if count < 2:
        raise ShapeError("need at least 2 output points")
    s = polyline_arc_lengths(pts)
    total = s[-1]
    if total <= 0.0:
        return np.repeat(pts[:1], count, axis=0)
    targets = np.linspace(0.0, total, count)
    out = np.empty((count, 3))
    for axis in range(3):
        out[:, axis] = np.interp(targets, s, pts[:, axis])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out
