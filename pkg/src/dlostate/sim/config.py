"""Configuration types for the rope simulator, camera, and occlusion synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError


@dataclass
class SimConfig:
    """Physical and solver parameters of the simulated rope."""

    length: float = 0.4             # meters, rest length
    radius: float = 0.005           # meters, tube radius
    particle_count: int = 50        # chain particles, >= 3
    stretch_stiffness: float = 1.0  # in (0, 1], per-iteration projection gain
    bend_stiffness: float = 0.2     # in (0, 1]
    solver_iterations: int = 30
    dt: float = 0.01                # seconds per step
    damping: float = 0.99           # velocity retained per step, in (0, 1]
    gravity: float = 9.81           # m/s^2, acting along -z
    gripper_speed: float = 0.12     # m/s translation limit
    gripper_angular_speed: float = 1.0  # rad/s rotation limit
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.length <= 0.0:
            raise ConfigError("length must be positive")
        if self.radius <= 0.0:
            raise ConfigError("radius must be positive")
        if self.particle_count < 3:
            raise ConfigError("particle_count must be >= 3")
        if self.length / self.particle_count <= 0.0:
            raise ConfigError("rest segment length must be positive")
        for name in ("stretch_stiffness", "bend_stiffness", "damping"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ConfigError(f"{name} must be in (0, 1], got {v}")
        if self.solver_iterations < 1:
            raise ConfigError("solver_iterations must be >= 1")
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if self.gripper_speed < 0.0 or self.gripper_angular_speed < 0.0:
            raise ConfigError("gripper speed limits must be non-negative")

    @property
    def rest_segment_length(self) -> float:
        return self.length / (self.particle_count - 1)


@dataclass
class CameraModel:
    """Pinhole camera with extrinsics mapping world points into the image."""

    fx: float = 570.0
    fy: float = 570.0
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480
    # camera-from-world rotation (row-vector convention: x_cam = (x_w - t) @ R)
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        if min(self.fx, self.fy) <= 0.0:
            raise ConfigError("focal lengths must be positive")
        if min(self.width, self.height) < 1:
            raise ConfigError("image size must be positive")
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.translation) @ self.rotation

    def camera_to_world(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """World points to (u, v) pixel coordinates and camera-frame depth z."""
        cam = self.world_to_camera(points)
        z = cam[:, 2]
        safe = np.where(np.abs(z) < 1e-12, 1e-12, z)
        u = self.fx * cam[:, 0] / safe + self.cx
        v = self.fy * cam[:, 1] / safe + self.cy
        return np.stack([u, v], axis=1), z

    def backproject(self, pix_u: np.ndarray, pix_v: np.ndarray, depth: np.ndarray) -> np.ndarray:
        """Pixel coordinates plus depth back to world points."""
        x = (np.asarray(pix_u, dtype=np.float64) - self.cx) * depth / self.fx
        y = (np.asarray(pix_v, dtype=np.float64) - self.cy) * depth / self.fy
        return self.camera_to_world(np.stack([x, y, np.asarray(depth, dtype=np.float64)], axis=1))


def default_camera() -> CameraModel:
    """Camera 0.9 m above the workspace center, looking straight down.

    World frame: z up, workspace around the origin.  The camera frame keeps
    +z along the viewing direction (downward), so depth is positive.
    """
    rot = np.array([
        [1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
    ])
    return CameraModel(rotation=rot.T, translation=np.array([0.0, 0.0, 0.9]))


@dataclass
class OcclusionSpec:
    """Synthetic occlusion: rectangular patches removed from the DLO mask."""

    target_fraction: float = 0.0  # fraction of DLO pixels to remove, in [0, 0.95]
    patch_count: int = 4          # nominal number of rectangles
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.target_fraction <= 0.95):
            raise ConfigError("target_fraction must be in [0, 0.95]")
        if self.patch_count < 1:
            raise ConfigError("patch_count must be >= 1")


@dataclass
class GripperWorkspace:
    """Axis-aligned target box plus a bounded orientation range for one gripper."""

    lo: np.ndarray                 # (3,) box corner, meters
    hi: np.ndarray                 # (3,) box corner, meters
    max_tilt: float = 0.6          # radians, rotation magnitude limit

    def __post_init__(self) -> None:
        self.lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        self.hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        if np.any(self.hi < self.lo):
            raise ConfigError("workspace box has hi < lo")
        if self.max_tilt < 0.0:
            raise ConfigError("max_tilt must be non-negative")
