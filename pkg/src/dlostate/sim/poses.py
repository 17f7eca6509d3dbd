"""Rigid gripper poses and interpolation helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import ShapeError

_IDENTITY_QUAT = (0.0, 0.0, 0.0, 1.0)


@dataclass
class Pose:
    """Position plus orientation quaternion (x, y, z, w)."""

    position: np.ndarray  # (3,) meters
    quaternion: np.ndarray = field(default_factory=lambda: np.array(_IDENTITY_QUAT))

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        q = np.asarray(self.quaternion, dtype=np.float64).reshape(4)
        norm = np.linalg.norm(q)
        if norm < 1e-12:
            raise ShapeError("quaternion has zero norm")
        self.quaternion = q / norm

    def copy(self) -> "Pose":
        return Pose(self.position.copy(), self.quaternion.copy())

    def rotation(self) -> Rotation:
        return Rotation.from_quat(self.quaternion)


def step_pose_toward(pose: Pose, target: Pose, max_dist: float, max_angle: float) -> Pose:
    """Move a pose toward a target with bounded translation and rotation.

    Translation is clamped to ``max_dist`` meters along the straight line and
    rotation to ``max_angle`` radians along the geodesic, so repeated calls
    trace a constant-speed screw toward the target.
    """
    delta = target.position - pose.position
    dist = float(np.linalg.norm(delta))
    if dist <= max_dist or dist < 1e-12:
        new_pos = target.position.copy()
    else:
        new_pos = pose.position + delta * (max_dist / dist)

    r0 = pose.rotation()
    r1 = target.rotation()
    rel = r1 * r0.inv()
    angle = float(np.linalg.norm(rel.as_rotvec()))
    if angle <= max_angle or angle < 1e-12:
        new_quat = target.quaternion.copy()
    else:
        frac = max_angle / angle
        new_quat = (Rotation.from_rotvec(rel.as_rotvec() * frac) * r0).as_quat()
    return Pose(new_pos, new_quat)
