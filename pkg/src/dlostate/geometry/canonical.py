"""Canonical normalization of raw observations into a scale-free frame.

The canonical frame is anchored at the first DLO endpoint, rotated so the
endpoint chord lies along +x with the chain's turning point in the half-plane
{y = 0, z >= 0}, then shifted to zero mean and divided by the largest side of
the axis-aligned bounding box.  All estimation networks operate in this frame;
predictions are mapped back through the inverse transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError, ShapeError
from .cloud import PointCloud, NodeSequence, FRAME_CANONICAL, FRAME_RAW

_DEGENERATE_TOL = 1e-6


@dataclass
class CanonicalTransform:
    """Rigid alignment plus mean/scale normalization, x_can = ((x + origin_shift) @ rotation - mean_shift) / scale."""

    origin_shift: np.ndarray  # (3,), minus the first endpoint
    rotation: np.ndarray      # (3, 3), orthonormal, acts on row vectors
    mean_shift: np.ndarray    # (3,), mean of the aligned cloud
    scale: float              # largest AABB side of the aligned cloud, > 0

    def __post_init__(self) -> None:
        self.origin_shift = np.asarray(self.origin_shift, dtype=np.float64).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.mean_shift = np.asarray(self.mean_shift, dtype=np.float64).reshape(3)
        self.scale = float(self.scale)
        if not np.isfinite(self.scale) or self.scale <= 0.0:
            raise NumericError(f"scale must be finite and positive, got {self.scale}")
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > 1e-9:
            raise NumericError(f"rotation is not orthonormal (deviation {err:.2e})")

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return ((points + self.origin_shift) @ self.rotation - self.mean_shift) / self.scale

    def invert_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return (points * self.scale + self.mean_shift) @ self.rotation.T - self.origin_shift

    def apply_rigid(self, points: np.ndarray) -> np.ndarray:
        """Shift-and-rotate only, before mean subtraction and scaling."""
        points = np.asarray(points, dtype=np.float64)
        return (points + self.origin_shift) @ self.rotation


def _roll_rotation(y: float, z: float) -> np.ndarray:
    """Rotation about x mapping the point (., y, z) into {y = 0, z >= 0}."""
    if np.hypot(y, z) < _DEGENERATE_TOL:
        return np.eye(3)
    theta = np.arctan2(y, z)
    c, s = np.cos(theta), np.sin(theta)
    roll = np.eye(3)
    roll[1:, 1:] = [[c, s], [-s, c]]
    return roll


def compute_canonical_transform(
    cloud: PointCloud,
    endpoint_a: np.ndarray,
    endpoint_b: np.ndarray,
) -> CanonicalTransform:
    """Build the canonical transform for a raw cloud and its two DLO endpoints.

    ``endpoint_a`` becomes the origin and the chord to ``endpoint_b`` the +x
    axis.  The residual roll about x is fixed by the cloud point whose
    x-coordinate after axis alignment is nearest to the chord midpoint: that
    point is rotated into the half-plane {y = 0, z >= 0}.  If it already lies
    on the x axis (within 1e-6) the roll is the identity.
    """
    pts = cloud.points
    if pts.shape[0] < 1:
        raise ShapeError("cloud must contain at least one point")
    e1 = np.asarray(endpoint_a, dtype=np.float64).reshape(3)
    e2 = np.asarray(endpoint_b, dtype=np.float64).reshape(3)
    chord = e2 - e1
    chord_len = float(np.linalg.norm(chord))
    if chord_len < _DEGENERATE_TOL:
        raise NumericError("endpoints coincide; canonical axis is undefined")
    d = chord / chord_len
    # complete d to a right-handed orthonormal basis; seed with the axis
    # least aligned with d for stability
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(d)))] = 1.0
    b = seed - np.dot(seed, d) * d
    b /= np.linalg.norm(b)
    c = np.cross(d, b)
    align = np.stack([d, b, c], axis=1)  # columns: v @ align = (v.d, v.b, v.c)

    shifted = pts - e1
    x_aligned = shifted @ d
    mid_idx = int(np.argmin(np.abs(x_aligned - 0.5 * chord_len)))
    mid = shifted[mid_idx] @ align
    rotation = align @ _roll_rotation(mid[1], mid[2])

    aligned = shifted @ rotation
    mean_shift = aligned.mean(axis=0)
    extent = aligned.max(axis=0) - aligned.min(axis=0)
    scale = float(extent.max())
    if scale < _DEGENERATE_TOL:
        scale = 1.0  # single point or fully degenerate cloud: no rescale
    return CanonicalTransform(-e1, rotation, mean_shift, scale)


def apply_transform(
    item: PointCloud | NodeSequence,
    transform: CanonicalTransform,
    inverse: bool = False,
) -> PointCloud | NodeSequence:
    """Map a cloud or node chain through the transform (or its inverse).

    Forward maps raw -> canonical; inverse maps canonical -> raw.  The frame
    tag of the result reflects the direction.
    """
    if inverse:
        fn, frame = transform.invert_points, FRAME_RAW
    else:
        fn, frame = transform.apply_points, FRAME_CANONICAL
    if isinstance(item, PointCloud):
        return PointCloud(fn(item.points), frame)
    if isinstance(item, NodeSequence):
        return NodeSequence(fn(item.nodes), frame)
    raise ShapeError(f"cannot transform object of type {type(item).__name__}")
